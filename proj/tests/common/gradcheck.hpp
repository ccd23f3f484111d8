#pragma once

#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testutil {

struct GradCheck {
  int probes = 0;
  double worst = 0.0;
};

/// Compares autograd gradients of a scalar function with central differences
/// at `probes` random elements of each tensor in `inputs` (float64, requiring
/// grad). Only the values of the probed element are perturbed.
inline GradCheck check_gradients(const std::function<torch::Tensor()>& fn,
                                 const std::vector<torch::Tensor>& inputs, int probes,
                                 std::uint64_t seed = 7, double eps = 1e-6) {
  for (const auto& t : inputs)
    if (t.grad().defined()) t.grad().zero_();
  fn().backward();
  std::vector<torch::Tensor> analytic;
  for (const auto& t : inputs) analytic.push_back(t.grad().clone());

  std::mt19937_64 rng(seed);
  GradCheck out;
  torch::NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto flat = inputs[k].view({-1});
    const auto grad = analytic[k].view({-1});
    std::uniform_int_distribution<std::int64_t> pick(0, flat.numel() - 1);
    for (int p = 0; p < probes; ++p) {
      const auto i = pick(rng);
      const double orig = flat[i].item<double>();
      flat[i] = orig + eps;
      const double up = fn().item<double>();
      flat[i] = orig - eps;
      const double down = fn().item<double>();
      flat[i] = orig;
      const double numeric = (up - down) / (2 * eps);
      const double a = grad[i].item<double>();
      const double rel = std::abs(a - numeric) / std::max(1e-6, std::max(std::abs(a), std::abs(numeric)));
      out.worst = std::max(out.worst, rel);
      ++out.probes;
    }
  }
  return out;
}

/// Random flow whose sample positions stay away from integer crossings of
/// the bilinear kernel, where the warp is not differentiable.
inline torch::Tensor smooth_flow(std::int64_t b, std::int64_t h, std::int64_t w, double amplitude,
                                 torch::ScalarType dtype = torch::kDouble) {
  auto whole = torch::randint(-static_cast<std::int64_t>(amplitude), static_cast<std::int64_t>(amplitude) + 1,
                              {b, 2, h, w}, torch::TensorOptions().dtype(dtype));
  auto frac = torch::rand({b, 2, h, w}, torch::TensorOptions().dtype(dtype)) * 0.6 + 0.2;
  return whole + frac;
}

}  // namespace testutil
