#include <sxtract/nn/checkpoint.hpp>

#include <sxtract/error.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace sxtract::nn {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'S', 'X', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::ostream& out, std::string_view s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw ParseError(path.string() + ": truncated checkpoint");
  }
  return v;
}

std::string get_string(std::istream& in, const std::filesystem::path& path) {
  const auto n = get<std::uint32_t>(in, path);
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw ParseError(path.string() + ": truncated checkpoint");
  return s;
}

std::string dims_string(const std::vector<std::int64_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

}  // namespace

const TensorRecord* Checkpoint::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const std::string& Checkpoint::meta_at(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw ParseError("checkpoint: missing metadata key '" + key + "'");
  return it->second;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, ckpt.config_hash);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    put_string(out, k);
    put_string(out, v);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    put_string(out, t.name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put<std::int64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(Scalar)));
  }
  if (!out) throw Error("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(path.string() + ": not a checkpoint file");
  }
  Checkpoint ckpt;
  ckpt.config_hash = get<std::uint64_t>(in, path);
  const auto n_meta = get<std::uint32_t>(in, path);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = get_string(in, path);
    ckpt.meta[k] = get_string(in, path);
  }
  const auto n_tensors = get<std::uint32_t>(in, path);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    TensorRecord t;
    t.name = get_string(in, path);
    const auto rank = get<std::uint32_t>(in, path);
    std::int64_t count = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const auto d = get<std::int64_t>(in, path);
      if (d <= 0) throw ParseError(path.string() + ": tensor '" + t.name + "' has non-positive dimension");
      t.shape.push_back(d);
      count *= d;
    }
    t.data.resize(static_cast<std::size_t>(count));
    if (!in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(count * sizeof(Scalar)))) {
      throw ParseError(path.string() + ": truncated data for tensor '" + t.name + "'");
    }
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

std::vector<TensorRecord> snapshot(const ParameterSet& params, std::string_view prefix) {
  std::vector<TensorRecord> out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params[i];
    if (!p.name.starts_with(prefix)) continue;
    TensorRecord t;
    t.name = p.name;
    t.shape = {p.value.rows(), p.value.cols()};
    t.data.assign(p.value.data(), p.value.data() + p.value.size());
    out.push_back(std::move(t));
  }
  return out;
}

void restore(ParameterSet& params, const Checkpoint& ckpt, std::string_view prefix) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (!p.name.starts_with(prefix)) continue;
    const TensorRecord* t = ckpt.find(p.name);
    if (t == nullptr) throw ShapeError("restore: checkpoint has no tensor '" + p.name + "'");
    const std::vector<std::int64_t> expected = {p.value.rows(), p.value.cols()};
    if (t->shape != expected) {
      throw ShapeError("restore: '" + p.name + "' checkpoint shape " + dims_string(t->shape) +
                       " vs model shape " + dims_string(expected));
    }
    std::memcpy(p.value.data(), t->data.data(), t->data.size() * sizeof(Scalar));
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace sxtract::nn
