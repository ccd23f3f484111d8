#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <string>
#include <vector>

namespace gclwarp {

/// Two-class (garment, background) mean IoU of binary masks of equal shape.
/// A class whose union is empty scores 1.
double miou(const torch::Tensor& pred_mask, const torch::Tensor& gt_mask);

/// Mean absolute difference over pixels with mask = 1 (all channels); 0 when
/// the mask is empty. Images [C, h, w] or [1, C, h, w], mask [h, w]-compatible.
double masked_l1(const torch::Tensor& pred, const torch::Tensor& gt, const torch::Tensor& mask);

struct SampleScore {
  std::string id;
  double miou = 0;
  double l1_masked = 0;
  double perceptual_proxy = 0;
  std::string error;  ///< non-empty when the sample could not be evaluated
};

struct EvalReport {
  std::string split;
  std::vector<SampleScore> samples;

  /// Means over samples without errors; all zero for an empty report.
  double mean_miou() const;
  double mean_l1_masked() const;
  double mean_perceptual() const;
  std::size_t evaluated() const;
};

/// Writes `<stem>.json` (per-sample records and aggregate means) and
/// `<stem>.csv` (one row per sample).
void write_report(const EvalReport& report, const std::filesystem::path& stem);

}  // namespace gclwarp
