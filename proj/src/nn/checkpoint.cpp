#include "dstsa/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "dstsa/errors.hpp"

namespace dstsa::nn {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian");

namespace {

constexpr char kMagic[8] = {'D', 'S', 'T', 'S', 'A', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename V>
void write_pod(std::ofstream& out, V value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(V));
}

template <typename V>
V read_pod(std::ifstream& in, const std::filesystem::path& file) {
  V value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(V))) {
    throw FormatError(file.string() + ": truncated checkpoint");
  }
  return value;
}

std::string read_string(std::ifstream& in, const std::filesystem::path& file) {
  const auto len = read_pod<std::uint32_t>(in, file);
  std::string s(len, '\0');
  if (len && !in.read(s.data(), len)) throw FormatError(file.string() + ": truncated checkpoint");
  return s;
}

void write_string(std::ofstream& out, const std::string& s) {
  write_pod(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

}  // namespace

const Tensor<float>* Checkpoint::find(std::string_view name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void Checkpoint::put(std::string name, Tensor<float> value) {
  for (auto& [n, t] : tensors) {
    if (n == name) {
      t = std::move(value);
      return;
    }
  }
  tensors.emplace_back(std::move(name), std::move(value));
}

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ckp) {
  std::filesystem::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);
    write_string(out, ckp.config);
    write_pod(out, static_cast<std::uint32_t>(ckp.tensors.size()));
    for (const auto& [name, t] : ckp.tensors) {
      write_string(out, name);
      write_pod(out, static_cast<std::uint32_t>(t.rank()));
      for (std::size_t d : t.shape()) write_pod(out, static_cast<std::uint64_t>(d));
      out.write(reinterpret_cast<const char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(float)));
    }
    if (!out) throw InputError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + file.string());
  char magic[8] = {};
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(file.string() + ": not a checkpoint");
  }
  const auto version = read_pod<std::uint32_t>(in, file);
  if (version != kVersion) {
    throw FormatError(file.string() + ": unsupported checkpoint version " +
                      std::to_string(version));
  }
  Checkpoint ckp;
  ckp.config = read_string(in, file);
  const auto count = read_pod<std::uint32_t>(in, file);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = read_string(in, file);
    const auto rank = read_pod<std::uint32_t>(in, file);
    if (rank > 8) throw FormatError(file.string() + ": implausible rank for " + name);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) {
      shape.push_back(static_cast<std::size_t>(read_pod<std::uint64_t>(in, file)));
    }
    Tensor<float> t(shape);
    if (!in.read(reinterpret_cast<char*>(t.data()),
                 static_cast<std::streamsize>(t.numel() * sizeof(float)))) {
      throw FormatError(file.string() + ": truncated tensor " + name);
    }
    ckp.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ckp;
}

void store_model(Model<float>& model, Checkpoint& ckp) {
  Collector<float> c;
  model.collect(c);
  for (const auto& p : c.params) ckp.put(p.name, p.var.value());
  for (const auto& [name, buf] : c.buffers) ckp.put(name, *buf);
}

void restore_model(Model<float>& model, const Checkpoint& ckp) {
  Collector<float> c;
  model.collect(c);
  auto fetch = [&](const std::string& name, const Shape& shape) -> const Tensor<float>& {
    const Tensor<float>* t = ckp.find(name);
    if (!t) throw IntegrityError("checkpoint lacks tensor " + name);
    if (t->shape() != shape) {
      throw IntegrityError("checkpoint tensor " + name + " has shape " + to_string(t->shape()) +
                           ", model expects " + to_string(shape));
    }
    return *t;
  };
  for (auto& p : c.params) p.var.mutable_value() = fetch(p.name, p.var.shape());
  for (auto& [name, buf] : c.buffers) *buf = fetch(name, buf->shape());
}

}  // namespace dstsa::nn
