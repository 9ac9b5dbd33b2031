#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mtgcn/tensor.hpp"

namespace mtgcn {

/// Skeleton topology: joint count, bone tree, left/right symmetric pairs,
/// hip (root) joint and capture rate.
struct SkeletonSpec {
  std::size_t joints = 0;
  std::vector<std::pair<std::size_t, std::size_t>> bones;
  std::vector<std::pair<std::size_t, std::size_t>> symmetric_pairs;  // (left, right)
  std::size_t hip_index = 0;
  int fps = 25;
  /// Optional explicit (left hip, right hip) pair used for facing alignment.
  std::optional<std::pair<std::size_t, std::size_t>> facing_override;

  std::size_t bone_count() const { return bones.size(); }
  std::size_t subjoint_count() const { return 3 * joints; }

  /// Joint pair defining the left->right hip axis: the override if set,
  /// otherwise the first symmetric pair whose two joints are both bone
  /// neighbours of the hip, otherwise the first symmetric pair.
  std::optional<std::pair<std::size_t, std::size_t>> facing_pair() const {
    if (facing_override) return facing_override;
    for (const auto& [l, r] : symmetric_pairs) {
      bool l_adj = false, r_adj = false;
      for (const auto& [a, b] : bones) {
        if ((a == hip_index && b == l) || (b == hip_index && a == l))
          l_adj = true;
        if ((a == hip_index && b == r) || (b == hip_index && a == r))
          r_adj = true;
      }
      if (l_adj && r_adj) return std::make_pair(l, r);
    }
    if (!symmetric_pairs.empty()) return symmetric_pairs.front();
    return std::nullopt;
  }

  void validate() const {
    require(joints >= 1, "skeleton: joint count must be >= 1");
    require(fps > 0, "skeleton: fps must be positive");
    require(hip_index < joints, "skeleton: hip index out of range");
    require(bones.size() + 1 == joints,
            "skeleton: a tree over " + std::to_string(joints) +
                " joints needs exactly " + std::to_string(joints - 1) +
                " bones, got " + std::to_string(bones.size()));
    for (const auto& [a, b] : bones) {
      require(a < joints && b < joints, "skeleton: bone index out of range");
      require(a != b, "skeleton: bone connects a joint to itself");
    }
    // J-1 edges + connected == tree (connected and acyclic)
    if (joints > 1) {
      std::vector<char> seen(joints, 0);
      std::vector<std::size_t> stack{hip_index};
      seen[hip_index] = 1;
      std::size_t visited = 1;
      while (!stack.empty()) {
        const std::size_t j = stack.back();
        stack.pop_back();
        for (const auto& [a, b] : bones) {
          std::size_t other = joints;
          if (a == j) other = b;
          else if (b == j) other = a;
          if (other < joints && !seen[other]) {
            seen[other] = 1;
            ++visited;
            stack.push_back(other);
          }
        }
      }
      require(visited == joints, "skeleton: bone graph is not connected");
    }
    std::vector<char> in_pair(joints, 0);
    for (const auto& [l, r] : symmetric_pairs) {
      require(l < joints && r < joints,
              "skeleton: symmetric pair index out of range");
      require(l != r, "skeleton: symmetric pair maps a joint to itself");
      require(!in_pair[l] && !in_pair[r],
              "skeleton: joint appears twice in symmetric pairs");
      in_pair[l] = in_pair[r] = 1;
    }
    if (facing_override) {
      require(facing_override->first < joints &&
                  facing_override->second < joints &&
                  facing_override->first != facing_override->second,
              "skeleton: invalid facing pair");
    }
  }
};

/// Parse the line-oriented skeleton format: `J <int>`, `FPS <int>`,
/// `HIP <int>`, one `BONE <a> <b>` per bone, one `SYM <l> <r>` per
/// symmetric pair, optional `FACING <l> <r>`. `#` starts a comment.
inline SkeletonSpec parse_skeleton(std::istream& in) {
  SkeletonSpec spec;
  bool have_j = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;  // blank line
    const std::string where = " (skeleton line " + std::to_string(lineno) + ")";
    auto read_index = [&](const char* what) {
      long v;
      require(static_cast<bool>(ls >> v) && v >= 0,
              std::string("skeleton: bad ") + what + where);
      return static_cast<std::size_t>(v);
    };
    if (key == "J") {
      spec.joints = read_index("joint count");
      have_j = true;
    } else if (key == "FPS") {
      long v;
      require(static_cast<bool>(ls >> v) && v > 0, "skeleton: bad FPS" + where);
      spec.fps = static_cast<int>(v);
    } else if (key == "HIP") {
      spec.hip_index = read_index("hip index");
    } else if (key == "BONE") {
      const std::size_t a = read_index("bone");
      const std::size_t b = read_index("bone");
      spec.bones.emplace_back(a, b);
    } else if (key == "SYM") {
      const std::size_t l = read_index("symmetric pair");
      const std::size_t r = read_index("symmetric pair");
      spec.symmetric_pairs.emplace_back(l, r);
    } else if (key == "FACING") {
      const std::size_t l = read_index("facing pair");
      const std::size_t r = read_index("facing pair");
      spec.facing_override = std::make_pair(l, r);
    } else {
      require(false, "skeleton: unknown directive '" + key + "'" + where);
    }
  }
  require(have_j, "skeleton: missing J line");
  spec.validate();
  return spec;
}

inline SkeletonSpec load_skeleton(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail_runtime("cannot open skeleton file: " + path);
  return parse_skeleton(f);
}

inline std::string serialize_skeleton(const SkeletonSpec& spec) {
  std::ostringstream os;
  os << "J " << spec.joints << "\n"
     << "FPS " << spec.fps << "\n"
     << "HIP " << spec.hip_index << "\n";
  for (const auto& [a, b] : spec.bones) os << "BONE " << a << " " << b << "\n";
  for (const auto& [l, r] : spec.symmetric_pairs)
    os << "SYM " << l << " " << r << "\n";
  if (spec.facing_override)
    os << "FACING " << spec.facing_override->first << " "
       << spec.facing_override->second << "\n";
  return os.str();
}

/// Euclidean length of every bone for one J x 3 frame.
inline Tensor bone_lengths(const Tensor& frame, const SkeletonSpec& spec) {
  require(frame.rank() == 2 && frame.dim(0) == spec.joints && frame.dim(1) == 3,
          "bone_lengths: frame must be " + std::to_string(spec.joints) +
              " x 3, got " + shape_str(frame.shape()));
  Tensor out({spec.bone_count()});
  for (std::size_t b = 0; b < spec.bones.size(); ++b) {
    const auto [u, v] = spec.bones[b];
    double sq = 0.0;
    for (std::size_t d = 0; d < 3; ++d) {
      const double e = frame.at(u, d) - frame.at(v, d);
      sq += e * e;
    }
    out[b] = std::sqrt(sq);
  }
  return out;
}

/// Milliseconds to a 1-based count of future frames: round(ms*fps/1000).
/// A horizon that rounds to zero frames is rejected.
inline std::size_t ms_to_frame(double ms, int fps) {
  require(ms > 0.0, "ms_to_frame: horizon must be positive");
  require(fps > 0, "ms_to_frame: fps must be positive");
  const long f = std::lround(ms * static_cast<double>(fps) / 1000.0);
  require(f >= 1, "ms_to_frame: horizon " + std::to_string(ms) +
                      " ms rounds to zero frames at " + std::to_string(fps) +
                      " fps");
  return static_cast<std::size_t>(f);
}

}  // namespace mtgcn
