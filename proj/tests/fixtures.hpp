#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "afmlens/core.hpp"

namespace fixtures {

inline afmlens::JoinedSample sample(double x, double y, std::int64_t start = 0) {
  afmlens::JoinedSample s;
  s.window_start = start;
  s.fabric = "f";
  s.nlm_kind = afmlens::MetricKind::of(afmlens::MetricName::MaxLinkUtilization);
  s.nlm_value = x;
  s.afm_kind = afmlens::AfmKind::latency(afmlens::SizeClass::KiB1, 99.0);
  s.afm_value = y;
  return s;
}

// Scratch directory removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("afmlens_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

}  // namespace fixtures
