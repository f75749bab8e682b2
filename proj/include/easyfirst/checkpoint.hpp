#pragma once

// Parameter checkpoint, binary, little-endian:
//
//   "EFTP1\n"
//   u64 metadata length, metadata bytes (free-form, JSON by convention)
//   u64 parameter count
//   per parameter, in name order:
//     u64 name length, name bytes, u64 rows, u64 cols, rows*cols IEEE-754 doubles
//
// Values are stored as raw doubles, so a save/load cycle is lossless.

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "easyfirst/autodiff.hpp"

namespace easyfirst {

inline constexpr char kCheckpointMagic[] = "EFTP1\n";

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

inline std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw CheckpointError("checkpoint: truncated file");
  return v;
}

inline std::string read_bytes(std::istream& in, std::uint64_t n) {
  if (n > (std::uint64_t{1} << 40)) throw CheckpointError("checkpoint: implausible length field");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) throw CheckpointError("checkpoint: truncated file");
  return s;
}

}  // namespace detail

inline void save_checkpoint(std::ostream& out, const ParameterStore& store, const std::string& metadata = {}) {
  out.write(kCheckpointMagic, sizeof kCheckpointMagic - 1);
  detail::write_u64(out, metadata.size());
  out.write(metadata.data(), static_cast<std::streamsize>(metadata.size()));
  detail::write_u64(out, store.size());
  for (const auto& [name, p] : store) {
    detail::write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_u64(out, p.value.rows);
    detail::write_u64(out, p.value.cols);
    out.write(reinterpret_cast<const char*>(p.value.data.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("checkpoint: write failed");
}

struct CheckpointContents {
  std::string metadata;
  std::map<std::string, Tensor> tensors;
};

inline CheckpointContents read_checkpoint(std::istream& in) {
  std::string magic(sizeof kCheckpointMagic - 1, '\0');
  if (!in.read(magic.data(), static_cast<std::streamsize>(magic.size())) || magic != kCheckpointMagic)
    throw CheckpointError("checkpoint: bad header (expected EFTP1)");
  CheckpointContents c;
  c.metadata = detail::read_bytes(in, detail::read_u64(in));
  const std::uint64_t count = detail::read_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = detail::read_bytes(in, detail::read_u64(in));
    const std::uint64_t rows = detail::read_u64(in);
    const std::uint64_t cols = detail::read_u64(in);
    std::string raw = detail::read_bytes(in, rows * cols * sizeof(double));
    Tensor t(rows, cols);
    std::memcpy(t.data.data(), raw.data(), raw.size());
    if (!c.tensors.emplace(std::move(name), std::move(t)).second)
      throw CheckpointError("checkpoint: duplicate parameter name");
  }
  return c;
}

/// Overwrite every parameter of `store` from the checkpoint. Names and shapes must match exactly.
inline void restore_parameters(const CheckpointContents& c, ParameterStore& store) {
  if (c.tensors.size() != store.size())
    throw CheckpointError("checkpoint: holds " + std::to_string(c.tensors.size()) + " parameters, model expects " +
                          std::to_string(store.size()));
  for (auto& [name, p] : store) {
    auto it = c.tensors.find(name);
    if (it == c.tensors.end()) throw CheckpointError("checkpoint: missing parameter " + name);
    if (!it->second.same_shape(p.value))
      throw CheckpointError("checkpoint: parameter " + name + " has shape " + it->second.shape_string() +
                            ", model expects " + p.value.shape_string());
    p.value = it->second;
  }
}

inline void save_checkpoint_file(const std::string& path, const ParameterStore& store, const std::string& metadata = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  save_checkpoint(out, store, metadata);
}

inline CheckpointContents read_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

}  // namespace easyfirst
