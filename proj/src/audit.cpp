#include "wadapt/audit.hpp"

#include <mutex>

#include "wadapt/error.hpp"

namespace wadapt::audit {
namespace {

struct Log {
  std::mutex mutex;
  bool recording = false;
  std::vector<std::string> paths;
};

Log& log() {
  static Log instance;
  return instance;
}

}  // namespace

void set_recording(bool on) {
  std::lock_guard lock(log().mutex);
  log().recording = on;
}

void clear() {
  std::lock_guard lock(log().mutex);
  log().paths.clear();
}

std::vector<std::string> reads() {
  std::lock_guard lock(log().mutex);
  return log().paths;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, "cannot open '" + path.string() + "'");
  std::lock_guard lock(log().mutex);
  if (log().recording) log().paths.push_back(std::filesystem::absolute(path).lexically_normal().string());
  return in;
}

}  // namespace wadapt::audit
