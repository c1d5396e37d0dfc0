#pragma once

#include <filesystem>
#include <string>

namespace testsupport {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(RESADAPT_FIXTURES_DIR) / name;
}

/// Fresh, empty scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::path(RESADAPT_SCRATCH_DIR) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
