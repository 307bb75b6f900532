#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace wadapt::audit {

// Every input file the library reads is opened through open_input, which
// appends the path to a process-wide log while recording is on. The CLI
// uses this to prove which files a command touched.

void set_recording(bool on);
void clear();
std::vector<std::string> reads();

/// Opens `path` for binary reading. Throws Error(MissingFile) naming the path.
std::ifstream open_input(const std::filesystem::path& path);

}  // namespace wadapt::audit
