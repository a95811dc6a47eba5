#pragma once

#include <sxtract/nn/parameter.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sxtract::nn {

struct TensorRecord {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<Scalar> data;
};

/// Self-describing parameter snapshot: (name, shape, data) triples plus a
/// config hash and free-form string metadata (model type, vocabularies, ...).
struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::map<std::string, std::string> meta;
  std::vector<TensorRecord> tensors;

  const TensorRecord* find(std::string_view name) const;
  const std::string& meta_at(const std::string& key) const;
};

// Binary layout, little-endian:
//   "SXCKPT01" | u64 config_hash | u32 n_meta { str key, str value }
//   | u32 n_tensors { str name, u32 rank, i64 dims[rank], f64 data[prod(dims)] }
// where str = u32 length + bytes. Doubles are written bit-for-bit.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<TensorRecord> snapshot(const ParameterSet& params, std::string_view prefix = {});
/// Overwrites every parameter whose name starts with prefix from the matching
/// record. Missing records or shape mismatches throw ShapeError naming both shapes.
void restore(ParameterSet& params, const Checkpoint& ckpt, std::string_view prefix = {});

/// FNV-1a 64-bit over bytes.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace sxtract::nn
