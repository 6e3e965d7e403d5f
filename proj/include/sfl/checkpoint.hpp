#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfl/nn.hpp"

namespace sfl {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat binary container: 8 magic bytes "SFLCKPT\0", u32 version, u64 config
// hash, u32 section count, then per section a name, a kind tag and the
// payload. Tensor payloads carry a shape table (u32 ndim, u64 dims[]) and
// row-major f64 values; blob payloads are raw bytes (JSON in practice).
// Everything is little-endian.
struct Checkpoint {
  struct Tensor {
    std::vector<uint64_t> dims;
    std::vector<double> data;
  };

  uint64_t config_hash = 0;
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> blobs;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  bool has_tensor(const std::string& name) const { return tensors.count(name) > 0; }
  const Tensor& tensor(const std::string& name) const;
  const std::string& blob(const std::string& name) const;

  // Mlp parameters as "<prefix>.layer<i>.{weight,bias}" tensors.
  void put_mlp(const std::string& prefix, const Mlp& net);
  void get_mlp(const std::string& prefix, Mlp& net) const;
  void put_adam(const std::string& prefix, const Adam& opt);
  void get_adam(const std::string& prefix, Adam& opt) const;
};

}  // namespace sfl
