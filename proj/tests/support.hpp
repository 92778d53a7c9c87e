#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "bta/core.hpp"
#include "bta/time.hpp"

namespace bta::test {

inline Timestamp ts(const char* text) { return parse_timestamp(text); }

inline Date date(const char* text) { return parse_date(text); }

/// Regular series starting at `start`, one sample every `step`, values from `fn(i)`.
inline TimeSeries regular(const std::string& id, Timestamp start, Seconds step, std::size_t n,
                          const std::function<double(std::size_t)>& fn) {
  std::vector<Sample> s;
  s.reserve(n);
  for (std::size_t i = 0; i < n; ++i) s.push_back({start + step * static_cast<long>(i), fn(i)});
  return TimeSeries(id, std::move(s));
}

inline TimeSeries constant(const std::string& id, Timestamp start, Seconds step, std::size_t n, double v) {
  return regular(id, start, step, n, [v](std::size_t) { return v; });
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("bta-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

}  // namespace bta::test
