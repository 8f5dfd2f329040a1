#pragma once

#include <filesystem>
#include <string>

#include "doctest.h"
#include "sdyn/datagen/rng.hpp"
#include "sdyn/error.hpp"
#include "sdyn/meshkit/constraints.hpp"
#include "sdyn/meshkit/voxelize.hpp"

namespace sdyn::test {

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sdyn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Aabb column_core(double half = 0.3) {
  return {Vec3(-half, -half, -1e9), Vec3(half, half, 1e9)};
}

inline Vec3 random_vec(Rng& rng, double scale) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

}  // namespace sdyn::test

#define CHECK_ERRC(expr, errc)                                     \
  do {                                                             \
    bool sdyn_thrown = false;                                      \
    try {                                                          \
      (void)(expr);                                                \
    } catch (const ::sdyn::Error& sdyn_e) {                        \
      sdyn_thrown = true;                                          \
      CHECK_MESSAGE(sdyn_e.code() == (errc), std::string(sdyn_e.what()));     \
    }                                                              \
    CHECK_MESSAGE(sdyn_thrown, "expected an sdyn::Error: " #expr); \
  } while (0)
