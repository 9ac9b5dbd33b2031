#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mtgcn/network.hpp"

namespace mtgcn {

/// Checkpoint file problem, carrying the byte offset it was detected at.
class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(const std::string& what, std::size_t offset)
      : std::runtime_error("checkpoint: " + what + " (at byte offset " +
                           std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

namespace detail {

constexpr char kCheckpointMagic[4] = {'M', 'T', 'G', 'C'};
constexpr std::uint8_t kCheckpointVersion = 1;

class ByteWriter {
 public:
  explicit ByteWriter(std::ostream& out) : out_(out) {}

  void bytes(const char* p, std::size_t n) {
    out_.write(p, static_cast<std::streamsize>(n));
    offset_ += n;
  }
  void u8(std::uint8_t v) { bytes(reinterpret_cast<const char*>(&v), 1); }
  void u32le(std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff),
                 static_cast<char>((v >> 24) & 0xff)};
    bytes(b, 4);
  }
  void f64le(double d) {
    const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    bytes(b, 8);
  }
  std::size_t offset() const { return offset_; }

 private:
  std::ostream& out_;
  std::size_t offset_ = 0;
};

class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  void bytes(char* p, std::size_t n, const char* what) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw CheckpointError(std::string("truncated while reading ") + what,
                            offset_);
    offset_ += n;
  }
  std::uint8_t u8(const char* what) {
    char b;
    bytes(&b, 1, what);
    return static_cast<std::uint8_t>(b);
  }
  std::uint32_t u32le(const char* what) {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4, what);
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }
  double f64le(const char* what) {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }
  std::size_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

}  // namespace detail

/// Format: magic "MTGC", one version byte, then J, T, T_out, H, L, flags as
/// 32-bit little-endian integers (flags bit 0 = global residual), then all
/// model tensors as 64-bit little-endian doubles in declared state order.
inline void save_checkpoint(const Model& model, std::ostream& out) {
  detail::ByteWriter w(out);
  w.bytes(detail::kCheckpointMagic, 4);
  w.u8(detail::kCheckpointVersion);
  const ModelConfig& c = model.config;
  w.u32le(static_cast<std::uint32_t>(c.joints));
  w.u32le(static_cast<std::uint32_t>(c.t_in));
  w.u32le(static_cast<std::uint32_t>(c.t_out));
  w.u32le(static_cast<std::uint32_t>(c.hidden));
  w.u32le(static_cast<std::uint32_t>(c.layers));
  w.u32le(c.use_global_residual ? 1u : 0u);
  model.visit_state([&](const std::string&, const Tensor& t) {
    for (std::size_t i = 0; i < t.numel(); ++i) w.f64le(t[i]);
  });
}

inline void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail_runtime("cannot open checkpoint for writing: " + path);
  save_checkpoint(model, f);
  f.flush();
  if (!f) fail_runtime("write failed for checkpoint: " + path);
}

inline Model load_checkpoint(std::istream& in) {
  detail::ByteReader r(in);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, detail::kCheckpointMagic, 4) != 0)
    throw CheckpointError("bad magic bytes", 0);
  const std::uint8_t version = r.u8("format version");
  if (version != detail::kCheckpointVersion)
    throw CheckpointError(
        "unsupported format version " + std::to_string(version), 4);

  ModelConfig cfg;
  cfg.joints = r.u32le("joint count");
  cfg.t_in = r.u32le("observed frame count");
  cfg.t_out = r.u32le("predicted frame count");
  cfg.hidden = r.u32le("hidden width");
  cfg.layers = r.u32le("layer count");
  const std::uint32_t flags = r.u32le("flags");
  cfg.use_global_residual = (flags & 1u) != 0;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("invalid config: ") + e.what(),
                          r.offset());
  }

  Model model = Model::init(cfg, 0);
  model.visit_state([&](const std::string& name, Tensor& t) {
    for (std::size_t i = 0; i < t.numel(); ++i)
      t[i] = r.f64le(name.c_str());
  });
  if (!r.at_eof())
    throw CheckpointError("trailing bytes after parameter blobs", r.offset());
  return model;
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail_runtime("cannot open checkpoint: " + path);
  return load_checkpoint(f);
}

/// Load and reject dimension mismatches against an expected configuration.
inline Model load_checkpoint(const std::string& path,
                             const ModelConfig& expected) {
  Model m = load_checkpoint(path);
  if (!m.config.same_dims(expected))
    fail_runtime("checkpoint dimensions { " + m.config.dims_str() +
                 " } do not match requested { " + expected.dims_str() + " }");
  return m;
}

}  // namespace mtgcn
