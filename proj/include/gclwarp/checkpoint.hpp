#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace gclwarp {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Versioned binary container:
///   "GCLCKPT\0", u32 version, u32 stage, i64 step, f64 best_metric,
///   u32 length + config JSON, u32 tensor count, then per tensor
///   u32 length + name, u8 dtype (0 f32, 1 f64, 2 i64), u32 rank, i64 dims,
///   raw little-endian data. Tensors keep insertion order, so equal contents
///   always serialize to equal bytes.
struct Checkpoint {
  std::uint32_t stage = 1;
  std::int64_t step = 0;
  double best_metric = 0.0;
  std::string config_json;
  std::vector<std::pair<std::string, torch::Tensor>> tensors;

  const torch::Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Appends every parameter and buffer of `module` as "<prefix>.<name>".
void store_module(Checkpoint& ckpt, const std::string& prefix, const torch::nn::Module& module);
/// Copies stored values into `module`; throws if a tensor is missing or has
/// the wrong shape.
void restore_module(const Checkpoint& ckpt, const std::string& prefix, torch::nn::Module& module);

/// Adam moments and step counts, keyed by the parameter order of `params`.
void store_adam(Checkpoint& ckpt, const std::string& prefix, const std::vector<torch::Tensor>& params,
                torch::optim::Adam& optimizer);
void restore_adam(const Checkpoint& ckpt, const std::string& prefix,
                  const std::vector<torch::Tensor>& params, torch::optim::Adam& optimizer);

/// FNV-1a hash over the bytes of all parameters and buffers.
std::uint64_t parameter_fingerprint(const torch::nn::Module& module);

}  // namespace gclwarp
