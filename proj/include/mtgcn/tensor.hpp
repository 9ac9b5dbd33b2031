#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtgcn {

using Shape = std::vector<std::size_t>;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

[[noreturn]] inline void fail_runtime(const std::string& msg) {
  throw std::runtime_error(msg);
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

/// Dense row-major tensor of doubles, 1 to 3 dimensions.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(numel_of(shape_), 0.0);
  }

  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    require(data_.size() == numel_of(shape_),
            "tensor data length " + std::to_string(data_.size()) +
                " does not match shape " + shape_str(shape_));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor full(Shape shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j) {
    assert(rank() == 2 && i < shape_[0] && j < shape_[1]);
    return data_[i * shape_[1] + j];
  }
  double at(std::size_t i, std::size_t j) const {
    assert(rank() == 2 && i < shape_[0] && j < shape_[1]);
    return data_[i * shape_[1] + j];
  }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    assert(rank() == 3 && i < shape_[0] && j < shape_[1] && k < shape_[2]);
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    assert(rank() == 3 && i < shape_[0] && j < shape_[1] && k < shape_[2]);
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  /// Same data, new shape; element count must be preserved.
  Tensor reshaped(Shape shape) const {
    require(numel_of(shape) == numel(),
            "reshape " + shape_str(shape_) + " -> " + shape_str(shape) +
                " changes element count");
    return Tensor(std::move(shape), data_);
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  static std::size_t numel_of(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           std::multiplies<>());
  }

 private:
  void validate_shape() const {
    require(!shape_.empty() && shape_.size() <= 3,
            "tensor rank must be 1..3, got " + std::to_string(shape_.size()));
    for (std::size_t d : shape_)
      require(d > 0, "tensor dimensions must be positive, got " + shape_str(shape_));
  }

  Shape shape_;
  std::vector<double> data_;
};

/// Deterministic RNG. Draws uniform doubles from the top 53 bits of a
/// mt19937_64 stream so results do not depend on libstdc++ distribution
/// internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix(seed)) {}

  std::uint64_t next_u64() {
    // xorshift* keeps the generator self-contained and portable
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }

  /// Uniform in [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0,n).
  std::size_t below(std::size_t n) {
    assert(n > 0);
    return static_cast<std::size_t>(next_u64() % n);
  }

  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  /// Stable combination of two seeds (e.g. base seed and epoch index).
  static std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
    return splitmix(a ^ (splitmix(b) + 0x9E3779B97F4A7C15ULL));
  }

 private:
  std::uint64_t state_;
};

/// In-place Fisher-Yates shuffle driven by Rng (std::shuffle is
/// implementation-defined across standard libraries).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng.below(i);
    std::swap(v[i - 1], v[j]);
  }
}

namespace detail {

// C = A(m x k) * B(k x n), row-major. The k-loop is outermost over the
// accumulation so per-element summation order equals the naive triple loop.
inline void gemm_nn(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    const double* ai = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = ai[l];
      const double* bl = b + l * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

// C = A^T(m x k) * B(k x n) with A stored k x m.
inline void gemm_tn(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate) {
  if (!accumulate)
    for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  for (std::size_t l = 0; l < k; ++l) {
    const double* al = a + l * m;
    const double* bl = b + l * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = al[i];
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

// C = A(m x k) * B^T(k x n) with B stored n x k.
inline void gemm_nt(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += ai[l] * bj[l];
      if (accumulate)
        ci[j] += s;
      else
        ci[j] = s;
    }
  }
}

}  // namespace detail

/// C[i,j] = sum_l A[i,l] * B[l,j]. Rejects mismatched inner dimensions
/// before touching any data.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2,
          "matmul expects 2-D operands, got " + shape_str(a.shape()) + " and " +
              shape_str(b.shape()));
  require(a.dim(1) == b.dim(0),
          "matmul inner dimensions differ: " + shape_str(a.shape()) + " vs " +
              shape_str(b.shape()));
  Tensor c({a.dim(0), b.dim(1)});
  detail::gemm_nn(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1),
                  false);
  return c;
}

/// Stack 2-D blocks with a shared column count, preserving input order.
inline Tensor concat_rows(const std::vector<Tensor>& blocks) {
  require(!blocks.empty(), "concat_rows needs at least one block");
  const std::size_t cols = blocks.front().dim(1);
  std::size_t rows = 0;
  for (const Tensor& b : blocks) {
    require(b.rank() == 2, "concat_rows expects 2-D blocks");
    require(b.dim(1) == cols,
            "concat_rows column mismatch: " + std::to_string(b.dim(1)) +
                " vs " + std::to_string(cols));
    rows += b.dim(0);
  }
  Tensor out({rows, cols});
  double* dst = out.data();
  for (const Tensor& b : blocks) {
    std::copy(b.data(), b.data() + b.numel(), dst);
    dst += b.numel();
  }
  return out;
}

}  // namespace mtgcn
