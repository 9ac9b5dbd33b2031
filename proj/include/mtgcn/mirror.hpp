#pragma once

#include <numeric>
#include <vector>

#include "mtgcn/motion.hpp"
#include "mtgcn/skeleton.hpp"

namespace mtgcn {

/// Joint permutation exchanging left and right limbs: the product of the
/// transpositions given by the skeleton's symmetric pairs. An involution.
struct MirrorPermutation {
  std::vector<std::size_t> map;  // output row i takes input row map[i]

  static MirrorPermutation from_spec(const SkeletonSpec& spec) {
    MirrorPermutation p;
    p.map.resize(spec.joints);
    std::iota(p.map.begin(), p.map.end(), std::size_t{0});
    for (const auto& [l, r] : spec.symmetric_pairs) std::swap(p.map[l], p.map[r]);
    return p;
  }
};

/// Reflect one canonical J x 3 frame across the yOz plane: x negated,
/// y and z unchanged.
inline Tensor mirror_reflect(const Tensor& frame) {
  require(frame.rank() == 2 && frame.dim(1) == 3,
          "mirror_reflect: frame must be J x 3");
  Tensor out = frame;
  for (std::size_t i = 0; i < out.dim(0); ++i) out.at(i, 0) = -out.at(i, 0);
  return out;
}

/// Row i of the output is row perm(i) of the input; unpaired joints stay.
inline Tensor swap_symmetric(const Tensor& frame,
                             const MirrorPermutation& perm) {
  require(frame.rank() == 2 && frame.dim(0) == perm.map.size(),
          "swap_symmetric: frame/permutation size mismatch");
  Tensor out(frame.shape());
  for (std::size_t i = 0; i < perm.map.size(); ++i)
    for (std::size_t d = 0; d < frame.dim(1); ++d)
      out.at(i, d) = frame.at(perm.map[i], d);
  return out;
}

/// Mirror transformation of a canonicalized sequence: per frame, reflect
/// across yOz then exchange left and right limbs. Produces the
/// habit-flipped counterpart of the motion.
inline MotionSequence mirror_transform(const MotionSequence& seq,
                                       const SkeletonSpec& spec) {
  seq.validate();
  require(seq.joints() == spec.joints,
          "mirror_transform: sequence/skeleton joint count mismatch");
  const MirrorPermutation perm = MirrorPermutation::from_spec(spec);
  MotionSequence out = seq;
  for (std::size_t i = 0; i < seq.joints(); ++i)
    for (std::size_t d = 0; d < 3; ++d)
      for (std::size_t t = 0; t < seq.frames(); ++t) {
        const double v = seq.data.at(perm.map[i], d, t);
        out.data.at(i, d, t) = (d == 0) ? -v : v;
      }
  return out;
}

}  // namespace mtgcn
