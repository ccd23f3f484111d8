#pragma once

#include <gtest/gtest.h>
#include <torch/torch.h>

#include "../common/gradcheck.hpp"

#include <filesystem>
#include <string>

namespace testutil {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("gclwarp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
