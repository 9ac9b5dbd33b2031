#pragma once

#include <cmath>
#include <vector>

#include "mtgcn/tape.hpp"
#include "mtgcn/tensor.hpp"

namespace mtgcn {

/// Joint trajectory graph convolution parameters: learnable adjacency over
/// the J joint trajectories plus a shared hidden transform.
struct JTGCLayer {
  Tensor adj;     // J x J
  Tensor weight;  // H x H
};

/// Global sub-joint trajectory graph convolution parameters: learnable
/// adjacency over all N = 3J sub-joint trajectories.
struct GSTGCLayer {
  Tensor adj;     // N x N
  Tensor weight;  // H x H
};

/// Local sub-joint trajectory graph convolution parameters: one learnable
/// 3 x 3 adjacency per joint and one shared hidden transform.
struct LSTGCLayer {
  std::vector<Tensor> adj;  // J matrices, 3 x 3
  Tensor weight;            // H x H
};

/// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)], fan_in being the
/// matrix's input dimension. Keeps initial activations O(1).
inline Tensor init_matrix(std::size_t rows, std::size_t cols,
                          std::size_t fan_in, Rng& rng) {
  require(rows > 0 && cols > 0 && fan_in > 0,
          "init_matrix: dimensions must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.numel(); ++i)
    t[i] = rng.uniform(-bound, bound);
  return t;
}

inline JTGCLayer init_jtgc(std::size_t joints, std::size_t hidden, Rng& rng) {
  return JTGCLayer{init_matrix(joints, joints, joints, rng),
                   init_matrix(hidden, hidden, hidden, rng)};
}

inline GSTGCLayer init_gstgc(std::size_t subjoints, std::size_t hidden,
                             Rng& rng) {
  return GSTGCLayer{init_matrix(subjoints, subjoints, subjoints, rng),
                    init_matrix(hidden, hidden, hidden, rng)};
}

inline LSTGCLayer init_lstgc(std::size_t joints, std::size_t hidden,
                             Rng& rng) {
  LSTGCLayer l;
  l.adj.reserve(joints);
  for (std::size_t i = 0; i < joints; ++i)
    l.adj.push_back(init_matrix(3, 3, 3, rng));
  l.weight = init_matrix(hidden, hidden, hidden, rng);
  return l;
}

inline JTGCLayer init_jtgc(std::size_t joints, std::size_t hidden,
                           std::uint64_t seed) {
  Rng rng(seed);
  return init_jtgc(joints, hidden, rng);
}
inline GSTGCLayer init_gstgc(std::size_t subjoints, std::size_t hidden,
                             std::uint64_t seed) {
  Rng rng(seed);
  return init_gstgc(subjoints, hidden, rng);
}
inline LSTGCLayer init_lstgc(std::size_t joints, std::size_t hidden,
                             std::uint64_t seed) {
  Rng rng(seed);
  return init_lstgc(joints, hidden, rng);
}

// Tape handles for one layer's parameters.
struct JTGCVars {
  Var adj, weight;
};
struct GSTGCVars {
  Var adj, weight;
};
struct LSTGCVars {
  std::vector<Var> adj;
  Var weight;
};

/// Row index lists shared by the convolutions. Rows follow the canonical
/// joint-major sub-joint order: row 3i+d is (joint i, axis d).
namespace rowsets {

inline std::vector<std::size_t> axis_rows(std::size_t joints, std::size_t d) {
  std::vector<std::size_t> idx(joints);
  for (std::size_t i = 0; i < joints; ++i) idx[i] = 3 * i + d;
  return idx;
}

inline std::vector<std::size_t> joint_rows(std::size_t i) {
  return {3 * i, 3 * i + 1, 3 * i + 2};
}

/// Maps axis-major concatenation (all x rows, all y rows, all z rows) back
/// to joint-major order: target row 3i+d reads source row d*J+i.
inline std::vector<std::size_t> axis_major_to_joint_major(std::size_t joints) {
  std::vector<std::size_t> idx(3 * joints);
  for (std::size_t i = 0; i < joints; ++i)
    for (std::size_t d = 0; d < 3; ++d) idx[3 * i + d] = d * joints + i;
  return idx;
}

}  // namespace rowsets

/// Global sub-joint trajectory graph convolution: Y = A * V * W over all
/// N sub-joint trajectory rows.
inline Var gstgc_forward(Tape& t, Var v, const GSTGCVars& layer) {
  return t.matmul_right(t.matmul_left(layer.adj, v), layer.weight);
}

/// Joint trajectory graph convolution: per axis d, A acts on the J rows of
/// that axis and W on the hidden features; the three axis blocks are
/// concatenated and re-permuted to the canonical joint-major row order, so
/// output row 3i+d belongs to (joint i, axis d).
inline Var jtgc_forward(Tape& t, Var v, const JTGCVars& layer,
                        std::size_t joints) {
  std::vector<Var> per_axis;
  per_axis.reserve(3);
  for (std::size_t d = 0; d < 3; ++d)
    per_axis.push_back(
        t.matmul_left(layer.adj, t.gather_rows(v, rowsets::axis_rows(joints, d))));
  Var cat = t.concat_rows(per_axis);
  Var ordered = t.gather_rows(cat, rowsets::axis_major_to_joint_major(joints));
  return t.matmul_right(ordered, layer.weight);
}

/// Local sub-joint trajectory graph convolution: per joint i, its own
/// 3 x 3 adjacency acts on the joint's three sub-joint rows; blocks are
/// concatenated joint-major and share one hidden transform.
inline Var lstgc_forward(Tape& t, Var v, const LSTGCVars& layer,
                         std::size_t joints) {
  require(layer.adj.size() == joints,
          "lstgc_forward: expected " + std::to_string(joints) +
              " local adjacencies, got " + std::to_string(layer.adj.size()));
  std::vector<Var> per_joint;
  per_joint.reserve(joints);
  for (std::size_t i = 0; i < joints; ++i)
    per_joint.push_back(
        t.matmul_left(layer.adj[i], t.gather_rows(v, rowsets::joint_rows(i))));
  return t.matmul_right(t.concat_rows(per_joint), layer.weight);
}

}  // namespace mtgcn
