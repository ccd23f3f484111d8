#include "gclwarp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "gclwarp/dataset_io.hpp"

namespace gclwarp {

namespace {

constexpr char kMagic[8] = {'G', 'C', 'L', 'C', 'K', 'P', 'T', '\0'};
static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  std::vector<char> bytes;
};

class Reader {
 public:
  Reader(const std::filesystem::path& path, std::vector<char> bytes)
      : path_(path), bytes_(std::move(bytes)) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  const char* take(std::size_t n) {
    need(n);
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw IoError(path_, "truncated checkpoint");
  }
  std::filesystem::path path_;
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

std::uint8_t dtype_code(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat: return 0;
    case torch::kDouble: return 1;
    case torch::kLong: return 2;
    default: throw std::invalid_argument("checkpoint: unsupported tensor dtype");
  }
}

torch::ScalarType dtype_from_code(std::uint8_t c) {
  switch (c) {
    case 0: return torch::kFloat;
    case 1: return torch::kDouble;
    case 2: return torch::kLong;
    default: throw std::invalid_argument("checkpoint: unknown dtype code");
  }
}

}  // namespace

const torch::Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& [k, v] : tensors)
    if (k == name) return v;
  throw std::out_of_range("checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& kv : tensors)
    if (kv.first == name) return true;
  return false;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Writer w;
  w.bytes.insert(w.bytes.end(), kMagic, kMagic + 8);
  w.put(kCheckpointVersion);
  w.put(ckpt.stage);
  w.put(ckpt.step);
  w.put(ckpt.best_metric);
  w.put_string(ckpt.config_json);
  w.put(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    const auto t = tensor.detach().cpu().contiguous();
    w.put_string(name);
    w.put(dtype_code(t.scalar_type()));
    w.put(static_cast<std::uint32_t>(t.dim()));
    for (auto d : t.sizes()) w.put(static_cast<std::int64_t>(d));
    const auto* p = static_cast<const char*>(t.data_ptr());
    w.bytes.insert(w.bytes.end(), p, p + t.nbytes());
  }
  // Write to a sibling file first so an interrupted save never leaves a
  // truncated checkpoint behind.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp, "cannot open for writing");
    out.write(w.bytes.data(), static_cast<std::streamsize>(w.bytes.size()));
    if (!out) throw IoError(tmp, "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path, "cannot move checkpoint into place: " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open checkpoint");
  Reader r(path, std::vector<char>(std::istreambuf_iterator<char>(in), {}));
  if (std::memcmp(r.take(8), kMagic, 8) != 0) throw IoError(path, "not a checkpoint file");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw IoError(path, "unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.stage = r.get<std::uint32_t>();
  c.step = r.get<std::int64_t>();
  c.best_metric = r.get<double>();
  c.config_json = r.get_string();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.get_string();
    const auto dtype = dtype_from_code(r.get<std::uint8_t>());
    const auto rank = r.get<std::uint32_t>();
    std::vector<std::int64_t> dims(rank);
    for (auto& d : dims) d = r.get<std::int64_t>();
    auto t = torch::empty(dims, torch::TensorOptions().dtype(dtype));
    std::memcpy(t.data_ptr(), r.take(t.nbytes()), t.nbytes());
    c.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (!r.done()) throw IoError(path, "trailing bytes after checkpoint payload");
  return c;
}

void store_module(Checkpoint& ckpt, const std::string& prefix, const torch::nn::Module& module) {
  for (const auto& p : module.named_parameters(true))
    ckpt.tensors.emplace_back(prefix + "." + p.key(), p.value().detach().clone());
  for (const auto& b : module.named_buffers(true))
    ckpt.tensors.emplace_back(prefix + "." + b.key(), b.value().detach().clone());
}

void restore_module(const Checkpoint& ckpt, const std::string& prefix, torch::nn::Module& module) {
  torch::NoGradGuard no_grad;
  auto copy = [&](const std::string& key, torch::Tensor& dst) {
    const auto& src = ckpt.get(prefix + "." + key);
    if (src.sizes() != dst.sizes())
      throw std::invalid_argument("checkpoint tensor '" + prefix + "." + key +
                                  "' has an incompatible shape");
    dst.copy_(src);
  };
  for (auto& p : module.named_parameters(true)) copy(p.key(), p.value());
  for (auto& b : module.named_buffers(true)) copy(b.key(), b.value());
}

void store_adam(Checkpoint& ckpt, const std::string& prefix, const std::vector<torch::Tensor>& params,
                torch::optim::Adam& optimizer) {
  auto& state = optimizer.state();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto it = state.find(params[i].unsafeGetTensorImpl());
    if (it == state.end()) continue;
    const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
    const std::string key = prefix + "." + std::to_string(i);
    ckpt.tensors.emplace_back(key + ".step", torch::tensor({s.step()}, torch::kLong));
    ckpt.tensors.emplace_back(key + ".exp_avg", s.exp_avg().detach().clone());
    ckpt.tensors.emplace_back(key + ".exp_avg_sq", s.exp_avg_sq().detach().clone());
  }
}

void restore_adam(const Checkpoint& ckpt, const std::string& prefix,
                  const std::vector<torch::Tensor>& params, torch::optim::Adam& optimizer) {
  auto& state = optimizer.state();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string key = prefix + "." + std::to_string(i);
    if (!ckpt.has(key + ".step")) continue;
    auto s = std::make_unique<torch::optim::AdamParamState>();
    s->step(ckpt.get(key + ".step").item<std::int64_t>());
    s->exp_avg(ckpt.get(key + ".exp_avg").clone());
    s->exp_avg_sq(ckpt.get(key + ".exp_avg_sq").clone());
    state[params[i].unsafeGetTensorImpl()] = std::move(s);
  }
}

std::uint64_t parameter_fingerprint(const torch::nn::Module& module) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const torch::Tensor& t) {
    const auto c = t.detach().cpu().contiguous();
    const auto* p = static_cast<const unsigned char*>(c.data_ptr());
    for (std::size_t i = 0; i < c.nbytes(); ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& p : module.parameters(true)) mix(p);
  for (const auto& b : module.buffers(true)) mix(b);
  return h;
}

}  // namespace gclwarp
