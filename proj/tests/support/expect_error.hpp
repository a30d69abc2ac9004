#pragma once

#include <gtest/gtest.h>

#include "hsplat/error.hpp"

// Passes when `statement` throws hsplat::Error carrying `error_code`.
#define EXPECT_HSPLAT_ERROR(statement, error_code)                                          \
  do {                                                                                      \
    bool hsplat_thrown_ = false;                                                            \
    try {                                                                                   \
      statement;                                                                            \
    } catch (const ::hsplat::Error& e) {                                                    \
      hsplat_thrown_ = true;                                                                \
      EXPECT_EQ(e.code(), error_code) << "message: " << e.what();                           \
    }                                                                                       \
    EXPECT_TRUE(hsplat_thrown_) << #statement " did not throw";                             \
  } while (0)
