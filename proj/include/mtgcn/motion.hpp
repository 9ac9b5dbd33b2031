#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "mtgcn/skeleton.hpp"
#include "mtgcn/tensor.hpp"

namespace mtgcn {

/// A motion clip: joint trajectories as a J x 3 x T tensor (millimeters),
/// slice [i,:,:] being the 3 x T trajectory of joint i.
struct MotionSequence {
  Tensor data;  // J x 3 x T
  int fps = 25;
  std::string action;
  /// Set by canonicalize() when the facing rotation had to be skipped
  /// (degenerate hip axis or no symmetric pairs).
  bool rotation_skipped = false;

  std::size_t joints() const { return data.dim(0); }
  std::size_t frames() const { return data.dim(2); }

  void validate() const {
    require(data.rank() == 3 && data.dim(1) == 3,
            "motion sequence data must be J x 3 x T, got " +
                shape_str(data.shape()));
    require(data.dim(2) >= 1, "motion sequence needs at least one frame");
    require(data.all_finite(), "motion sequence contains non-finite values");
  }
};

inline MotionSequence make_sequence(Tensor data, int fps,
                                    std::string action = "") {
  MotionSequence seq{std::move(data), fps, std::move(action), false};
  seq.validate();
  return seq;
}

/// One frame as a J x 3 matrix.
inline Tensor frame_of(const MotionSequence& seq, std::size_t t) {
  require(t < seq.frames(), "frame index out of range");
  Tensor f({seq.joints(), 3});
  for (std::size_t i = 0; i < seq.joints(); ++i)
    for (std::size_t d = 0; d < 3; ++d) f.at(i, d) = seq.data.at(i, d, t);
  return f;
}

/// Frames [start, start+len) as a new sequence.
inline MotionSequence window(const MotionSequence& seq, std::size_t start,
                             std::size_t len) {
  require(len >= 1 && start + len <= seq.frames(),
          "window [" + std::to_string(start) + ", " +
              std::to_string(start + len) + ") out of range for " +
              std::to_string(seq.frames()) + " frames");
  Tensor out({seq.joints(), 3, len});
  for (std::size_t i = 0; i < seq.joints(); ++i)
    for (std::size_t d = 0; d < 3; ++d)
      for (std::size_t t = 0; t < len; ++t)
        out.at(i, d, t) = seq.data.at(i, d, start + t);
  MotionSequence w{std::move(out), seq.fps, seq.action, seq.rotation_skipped};
  return w;
}

/// N x T matrix of global sub-joint trajectories, row 3i+d holding the
/// d-axis trajectory of joint i. Row-major J x 3 x T already stores this
/// layout, so the mapping is a bitwise reshape.
inline Tensor to_global_subjoint(const MotionSequence& seq) {
  return seq.data.reshaped({3 * seq.joints(), seq.frames()});
}

/// Exact inverse of to_global_subjoint.
inline MotionSequence from_global_subjoint(const Tensor& m, int fps,
                                           std::string action = "") {
  require(m.rank() == 2, "from_global_subjoint: expects an N x T matrix");
  require(m.dim(0) % 3 == 0,
          "from_global_subjoint: row count " + std::to_string(m.dim(0)) +
              " not divisible by 3");
  return make_sequence(m.reshaped({m.dim(0) / 3, 3, m.dim(1)}), fps,
                       std::move(action));
}

inline MotionSequence from_global_subjoint(const Tensor& m,
                                           const SkeletonSpec& spec,
                                           std::string action = "") {
  MotionSequence seq = from_global_subjoint(m, spec.fps, std::move(action));
  require(seq.joints() == spec.joints,
          "from_global_subjoint: " + std::to_string(seq.joints()) +
              " joints in matrix vs " + std::to_string(spec.joints) +
              " in skeleton");
  return seq;
}

/// Remove global translation and rotation: the hip is moved to the origin
/// in every frame, then one rotation about the vertical z axis — computed
/// from the first frame's left-hip -> right-hip direction projected to the
/// ground plane — is applied to all frames so the body faces +y. Bone
/// lengths are untouched (rigid per frame). If the facing direction is
/// degenerate the rotation is skipped and the output is flagged.
inline MotionSequence canonicalize(const MotionSequence& raw,
                                   const SkeletonSpec& spec) {
  raw.validate();
  require(raw.joints() == spec.joints,
          "canonicalize: sequence has " + std::to_string(raw.joints()) +
              " joints, skeleton has " + std::to_string(spec.joints));
  const std::size_t j = raw.joints(), t = raw.frames();
  const std::size_t hip = spec.hip_index;

  MotionSequence out = raw;
  for (std::size_t f = 0; f < t; ++f) {
    const double hx = raw.data.at(hip, 0, f);
    const double hy = raw.data.at(hip, 1, f);
    const double hz = raw.data.at(hip, 2, f);
    for (std::size_t i = 0; i < j; ++i) {
      out.data.at(i, 0, f) -= hx;
      out.data.at(i, 1, f) -= hy;
      out.data.at(i, 2, f) -= hz;
    }
  }

  const auto pair = spec.facing_pair();
  if (!pair) {
    out.rotation_skipped = true;
    return out;
  }
  const auto [l, r] = *pair;
  const double dx = out.data.at(r, 0, 0) - out.data.at(l, 0, 0);
  const double dy = out.data.at(r, 1, 0) - out.data.at(l, 1, 0);
  if (std::hypot(dx, dy) < 1e-9) {
    out.rotation_skipped = true;
    return out;
  }
  // Rotate by -theta about z so the left->right hip axis lands on +x,
  // which puts the facing direction on +y and the symmetry plane on yOz.
  const double theta = std::atan2(dy, dx);
  const double c = std::cos(theta), s = std::sin(theta);
  for (std::size_t f = 0; f < t; ++f)
    for (std::size_t i = 0; i < j; ++i) {
      const double x = out.data.at(i, 0, f);
      const double y = out.data.at(i, 1, f);
      out.data.at(i, 0, f) = c * x + s * y;
      out.data.at(i, 1, f) = -s * x + c * y;
    }
  return out;
}

}  // namespace mtgcn
