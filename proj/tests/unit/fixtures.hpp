#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

// Fixture directory: TAGTRAIN_FIXTURES when set (ctest), else relative to the
// source tree for manual runs.
inline std::string fixtures_dir() {
  if (const char* env = std::getenv("TAGTRAIN_FIXTURES")) return env;
  return "tests/fixtures";
}

inline std::string fixture_path(const std::string& name) {
  return (std::filesystem::path(fixtures_dir()) / name).string();
}

inline std::string wordnet_mini_dir() { return fixture_path("wordnet_mini"); }
