#include "sfl/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace sfl {

namespace {

constexpr char kMagic[8] = {'S', 'F', 'L', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kVersion = 1;

enum SectionKind : uint8_t { kTensor = 0, kBlob = 1 };

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw CheckpointError("checkpoint truncated");
  return value;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  uint32_t len = read_pod<uint32_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw CheckpointError("checkpoint truncated");
  return s;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod<uint32_t>(out, kVersion);
  write_pod<uint64_t>(out, config_hash);
  write_pod<uint32_t>(out, static_cast<uint32_t>(tensors.size() + blobs.size()));
  for (const auto& [name, t] : tensors) {
    write_string(out, name);
    write_pod<uint8_t>(out, kTensor);
    write_pod<uint32_t>(out, static_cast<uint32_t>(t.dims.size()));
    uint64_t total = 1;
    for (uint64_t d : t.dims) {
      write_pod<uint64_t>(out, d);
      total *= d;
    }
    if (total != t.data.size()) throw CheckpointError("tensor shape mismatch: " + name);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  for (const auto& [name, b] : blobs) {
    write_string(out, name);
    write_pod<uint8_t>(out, kBlob);
    write_pod<uint64_t>(out, b.size());
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  }
  if (!out) throw CheckpointError("checkpoint write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint file: " + path);
  }
  uint32_t version = read_pod<uint32_t>(in);
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.config_hash = read_pod<uint64_t>(in);
  uint32_t sections = read_pod<uint32_t>(in);
  for (uint32_t i = 0; i < sections; ++i) {
    std::string name = read_string(in);
    uint8_t kind = read_pod<uint8_t>(in);
    if (kind == kTensor) {
      Tensor t;
      uint32_t ndim = read_pod<uint32_t>(in);
      uint64_t total = 1;
      for (uint32_t d = 0; d < ndim; ++d) {
        t.dims.push_back(read_pod<uint64_t>(in));
        total *= t.dims.back();
      }
      t.data.resize(total);
      in.read(reinterpret_cast<char*>(t.data.data()),
              static_cast<std::streamsize>(total * sizeof(double)));
      if (!in) throw CheckpointError("checkpoint truncated in tensor " + name);
      ck.tensors[name] = std::move(t);
    } else if (kind == kBlob) {
      uint64_t len = read_pod<uint64_t>(in);
      std::string b(len, '\0');
      in.read(b.data(), static_cast<std::streamsize>(len));
      if (!in) throw CheckpointError("checkpoint truncated in blob " + name);
      ck.blobs[name] = std::move(b);
    } else {
      throw CheckpointError("unknown section kind in checkpoint");
    }
  }
  return ck;
}

const Checkpoint::Tensor& Checkpoint::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw CheckpointError("checkpoint missing tensor: " + name);
  return it->second;
}

const std::string& Checkpoint::blob(const std::string& name) const {
  auto it = blobs.find(name);
  if (it == blobs.end()) throw CheckpointError("checkpoint missing blob: " + name);
  return it->second;
}

void Checkpoint::put_mlp(const std::string& prefix, const Mlp& net) {
  for (size_t i = 0; i < net.layers().size(); ++i) {
    const Linear& l = net.layers()[i];
    std::string base = prefix + ".layer" + std::to_string(i);
    tensors[base + ".weight"] = {{static_cast<uint64_t>(l.out), static_cast<uint64_t>(l.in)},
                                 l.w};
    tensors[base + ".bias"] = {{static_cast<uint64_t>(l.out)}, l.b};
  }
}

void Checkpoint::get_mlp(const std::string& prefix, Mlp& net) const {
  for (size_t i = 0; i < net.layers().size(); ++i) {
    Linear& l = net.layers()[i];
    std::string base = prefix + ".layer" + std::to_string(i);
    const Tensor& w = tensor(base + ".weight");
    const Tensor& b = tensor(base + ".bias");
    if (w.dims.size() != 2 || w.dims[0] != static_cast<uint64_t>(l.out) ||
        w.dims[1] != static_cast<uint64_t>(l.in) || b.data.size() != l.b.size()) {
      throw CheckpointError("checkpoint shape mismatch at " + base +
                            " (config does not match the checkpoint)");
    }
    l.w = w.data;
    l.b = b.data;
  }
}

void Checkpoint::put_adam(const std::string& prefix, const Adam& opt) {
  tensors[prefix + ".m"] = {{static_cast<uint64_t>(opt.m.size())}, opt.m};
  tensors[prefix + ".v"] = {{static_cast<uint64_t>(opt.v.size())}, opt.v};
  tensors[prefix + ".t"] = {{1}, {static_cast<double>(opt.steps_taken())}};
}

void Checkpoint::get_adam(const std::string& prefix, Adam& opt) const {
  const Tensor& m = tensor(prefix + ".m");
  const Tensor& v = tensor(prefix + ".v");
  if (m.data.size() != opt.m.size() || v.data.size() != opt.v.size()) {
    throw CheckpointError("checkpoint optimizer state mismatch at " + prefix);
  }
  opt.m = m.data;
  opt.v = v.data;
  opt.set_steps_taken(static_cast<long>(tensor(prefix + ".t").data.at(0)));
}

}  // namespace sfl
