#include "hsplat/io/report.hpp"

#include <json.hpp>

#include <cstdio>

namespace hsplat::io {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <class Fn>
void for_each_scalar(const MetricReport& r, Fn&& fn) {
  if (r.cd) fn("cd", *r.cd);
  if (r.f_score) fn("f_score", *r.f_score);
  if (r.precision) fn("precision", *r.precision);
  if (r.recall) fn("recall", *r.recall);
  if (r.depth_rmse) fn("depth_rmse", *r.depth_rmse);
  if (r.depth_medae) fn("depth_medae", *r.depth_medae);
  if (r.intensity_rmse) fn("intensity_rmse", *r.intensity_rmse);
  if (r.intensity_medae) fn("intensity_medae", *r.intensity_medae);
  if (r.ssim) fn("ssim", *r.ssim);
}

}  // namespace

std::string report_key_values(const MetricReport& report) {
  std::string out;
  for_each_scalar(report, [&](const char* k, double v) { out += std::string(k) + "=" + num(v) + "\n"; });
  if (report.psnr) {
    out += "psnr=" + (report.psnr->infinite ? std::string("inf") : num(report.psnr->db)) + "\n";
    out += std::string("psnr_infinite=") + (report.psnr->infinite ? "1" : "0") + "\n";
  }
  if (report.predicted_points || report.reference_points) {
    out += "predicted_points=" + std::to_string(report.predicted_points) + "\n";
    out += "reference_points=" + std::to_string(report.reference_points) + "\n";
  }
  return out;
}

std::string report_json(const MetricReport& report) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for_each_scalar(report, [&](const char* k, double v) { j[k] = v; });
  if (report.psnr) {
    if (report.psnr->infinite) {
      j["psnr"] = nullptr;
    } else {
      j["psnr"] = report.psnr->db;
    }
    j["psnr_infinite"] = report.psnr->infinite;
  }
  if (report.predicted_points || report.reference_points) {
    j["predicted_points"] = report.predicted_points;
    j["reference_points"] = report.reference_points;
  }
  return j.dump(2) + "\n";
}

}  // namespace hsplat::io
