#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mtgcn/motion.hpp"

namespace mtgcn {

/// Sequence file: line 1 `J <int> T <int> FPS <int> [ACTION <word>]`, then
/// T lines of 3J space-separated decimals in joint-major x y z order.
/// Values are written with 17 significant digits so parse -> serialize is
/// value-exact.
inline void write_sequence(const MotionSequence& seq, std::ostream& out) {
  seq.validate();
  out << "J " << seq.joints() << " T " << seq.frames() << " FPS " << seq.fps;
  if (!seq.action.empty()) out << " ACTION " << seq.action;
  out << "\n";
  char buf[40];
  for (std::size_t t = 0; t < seq.frames(); ++t) {
    for (std::size_t i = 0; i < seq.joints(); ++i)
      for (std::size_t d = 0; d < 3; ++d) {
        std::snprintf(buf, sizeof(buf), "%.17g", seq.data.at(i, d, t));
        if (i > 0 || d > 0) out << ' ';
        out << buf;
      }
    out << "\n";
  }
}

inline void save_sequence(const MotionSequence& seq, const std::string& path) {
  std::ofstream f(path);
  if (!f) fail_runtime("cannot open sequence file for writing: " + path);
  write_sequence(seq, f);
  f.flush();
  if (!f) fail_runtime("write failed for sequence file: " + path);
}

inline MotionSequence read_sequence(std::istream& in,
                                    const std::string& name = "<stream>") {
  std::string header;
  require(static_cast<bool>(std::getline(in, header)),
          "sequence " + name + ": missing header line");
  std::istringstream hs(header);
  std::string key, action;
  long joints = -1, frames = -1, fps = -1;
  while (hs >> key) {
    if (key == "J")
      require(static_cast<bool>(hs >> joints) && joints > 0,
              "sequence " + name + ": bad J field");
    else if (key == "T")
      require(static_cast<bool>(hs >> frames) && frames > 0,
              "sequence " + name + ": bad T field");
    else if (key == "FPS")
      require(static_cast<bool>(hs >> fps) && fps > 0,
              "sequence " + name + ": bad FPS field");
    else if (key == "ACTION")
      require(static_cast<bool>(hs >> action),
              "sequence " + name + ": bad ACTION field");
    else
      require(false, "sequence " + name + ": unknown header field '" + key + "'");
  }
  require(joints > 0 && frames > 0 && fps > 0,
          "sequence " + name + ": header must set J, T and FPS");

  const std::size_t j = static_cast<std::size_t>(joints);
  const std::size_t t = static_cast<std::size_t>(frames);
  Tensor data({j, 3, t});
  std::string line;
  for (std::size_t f = 0; f < t; ++f) {
    require(static_cast<bool>(std::getline(in, line)),
            "sequence " + name + ": expected " + std::to_string(t) +
                " data lines, got " + std::to_string(f));
    const char* p = line.c_str();
    for (std::size_t i = 0; i < j; ++i)
      for (std::size_t d = 0; d < 3; ++d) {
        char* end = nullptr;
        const double v = std::strtod(p, &end);
        require(end != p, "sequence " + name + ": bad value at line " +
                              std::to_string(f + 2) + ", joint " +
                              std::to_string(i));
        data.at(i, d, f) = v;
        p = end;
      }
    // only whitespace may remain
    while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
    require(*p == '\0', "sequence " + name + ": trailing data at line " +
                            std::to_string(f + 2));
  }
  return make_sequence(std::move(data), static_cast<int>(fps),
                       std::move(action));
}

inline MotionSequence load_sequence(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail_runtime("cannot open sequence file: " + path);
  return read_sequence(f, path);
}

}  // namespace mtgcn
