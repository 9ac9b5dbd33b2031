#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "mtgcn/motion.hpp"
#include "mtgcn/skeleton.hpp"

namespace mtgcn {

namespace detail {

struct Oscillator {
  double base;
  double amp[2];
  double freq[2];   // Hz
  double phase[2];

  static Oscillator random(double base, Rng& rng) {
    Oscillator o;
    o.base = base;
    for (int k = 0; k < 2; ++k) {
      o.amp[k] = rng.uniform(0.05, 0.2);
      o.freq[k] = rng.uniform(0.2, 1.0);
      o.phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    return o;
  }

  double at(double seconds) const {
    double v = base;
    for (int k = 0; k < 2; ++k)
      v += amp[k] *
           std::sin(2.0 * std::numbers::pi * freq[k] * seconds + phase[k]);
    return v;
  }
};

}  // namespace detail

/// Smooth periodic synthetic motion for desk-scale verification: per bone a
/// unit base direction plus small sinusoidal sway per axis, the child joint
/// projected onto a fixed bone length from its parent every frame, hip
/// pinned at the origin. Output is canonicalized, so generated sequences
/// are a fixed point of canonicalize. Deterministic per seed.
inline std::vector<MotionSequence> synth_sequences(const SkeletonSpec& spec,
                                                   std::size_t count,
                                                   std::size_t length,
                                                   std::uint64_t seed) {
  spec.validate();
  require(count > 0 && length > 0, "synth: count and length must be positive");

  // Orient the bone tree away from the hip; children[j] lists (child, bone).
  const std::size_t j = spec.joints;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> children(j);
  {
    std::vector<char> seen(j, 0);
    seen[spec.hip_index] = 1;
    std::vector<std::size_t> frontier{spec.hip_index};
    while (!frontier.empty()) {
      std::vector<std::size_t> next;
      for (std::size_t p : frontier)
        for (std::size_t b = 0; b < spec.bones.size(); ++b) {
          const auto [u, v] = spec.bones[b];
          std::size_t child = j;
          if (u == p && !seen[v]) child = v;
          else if (v == p && !seen[u]) child = u;
          if (child < j) {
            seen[child] = 1;
            children[p].emplace_back(child, b);
            next.push_back(child);
          }
        }
      frontier = std::move(next);
    }
  }

  std::vector<MotionSequence> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    Rng rng(Rng::combine(seed, s));

    std::vector<double> bone_len(spec.bone_count());
    for (double& l : bone_len) l = rng.uniform(0.5, 1.5);

    // one oscillator triple per bone, around a random base direction
    std::vector<std::array<detail::Oscillator, 3>> sway(spec.bone_count());
    for (std::size_t b = 0; b < spec.bone_count(); ++b) {
      double base[3], norm = 0.0;
      do {
        norm = 0.0;
        for (int d = 0; d < 3; ++d) {
          base[d] = rng.uniform(-1.0, 1.0);
          norm += base[d] * base[d];
        }
        norm = std::sqrt(norm);
      } while (norm < 0.3);
      for (int d = 0; d < 3; ++d)
        sway[b][static_cast<std::size_t>(d)] =
            detail::Oscillator::random(base[d] / norm, rng);
    }

    Tensor data({j, 3, length});
    for (std::size_t t = 0; t < length; ++t) {
      const double seconds =
          static_cast<double>(t) / static_cast<double>(spec.fps);
      // BFS order: parents are placed before their children
      std::vector<std::size_t> frontier{spec.hip_index};
      while (!frontier.empty()) {
        std::vector<std::size_t> next;
        for (std::size_t p : frontier)
          for (const auto& [child, b] : children[p]) {
            double dir[3], norm = 0.0;
            for (std::size_t d = 0; d < 3; ++d) {
              dir[d] = sway[b][d].at(seconds);
              norm += dir[d] * dir[d];
            }
            norm = std::sqrt(norm);
            for (std::size_t d = 0; d < 3; ++d)
              data.at(child, d, t) =
                  data.at(p, d, t) + bone_len[b] * dir[d] / norm;
            next.push_back(child);
          }
        frontier = std::move(next);
      }
    }
    out.push_back(
        canonicalize(make_sequence(std::move(data), spec.fps, "synthetic"), spec));
  }
  return out;
}

}  // namespace mtgcn
