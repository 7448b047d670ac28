#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "hypergat/error.hpp"

namespace hypergat::io {

struct OpenEvent {
  std::string path;
  bool write = false;
};

// Process-wide log of every file the library opens. All reads and writes go
// through open_input/open_output so tests can audit exactly which paths a
// command touched (e.g. that training never reads test files). Commands are
// single-threaded, so the log is unsynchronized.
inline std::vector<OpenEvent>& open_log() {
  static std::vector<OpenEvent> log;
  return log;
}

inline void clear_open_log() { open_log().clear(); }

inline std::ifstream open_input(const std::string& path, bool binary = false) {
  open_log().push_back({path, false});
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open " + path + " for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path, bool binary = false) {
  open_log().push_back({path, true});
  std::ofstream out(path, binary ? (std::ios::binary | std::ios::trunc)
                                 : std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  return out;
}

}  // namespace hypergat::io
