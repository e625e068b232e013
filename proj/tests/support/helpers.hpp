#pragma once

#include <filesystem>
#include <string>

namespace test_support {

inline std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "spegarch_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace test_support
