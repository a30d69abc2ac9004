#pragma once

#include <filesystem>
#include <string>

#include "hsplat/metrics.hpp"

namespace hsplat::io {

/// `key=value` lines for the metrics present in the report. An infinite
/// PSNR is written as `psnr=inf` with `psnr_infinite=1`.
std::string report_key_values(const MetricReport& report);

/// The same content as a JSON object (PSNR infinity as null plus the flag).
std::string report_json(const MetricReport& report);

}  // namespace hsplat::io
