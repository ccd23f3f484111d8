#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gclwarp/checkpoint.hpp"
#include "gclwarp/config.hpp"
#include "gclwarp/dataset_io.hpp"
#include "gclwarp/generator.hpp"
#include "gclwarp/losses.hpp"
#include "gclwarp/metrics.hpp"
#include "gclwarp/model.hpp"

namespace gclwarp {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- data ----

/// Entries for all three splits; seeds derive from config.data_seed.
std::vector<DatasetEntry> plan_dataset(const Config& config);

/// Renders and writes the planned dataset to `root`.
Manifest generate_dataset(const Config& config, const fs::path& root);

struct LoadedSplit {
  std::vector<DatasetEntry> entries;
  std::vector<SceneSample> samples;
};

LoadedSplit load_split(const fs::path& root, const std::string& split);

// ---------------------------------------------------------------- models ---

struct Stage1Model {
  Config config;
  CorrespondenceNet net{nullptr};
};

struct Stage2Model {
  Config config;
  CorrespondenceNet net{nullptr};
  TryOnGenerator generator{nullptr};
  PatchDiscriminator discriminator{nullptr};
};

/// Loads the correspondence network from a stage-1 or stage-2 checkpoint.
Stage1Model load_stage1(const fs::path& checkpoint);
Stage2Model load_stage2(const fs::path& checkpoint);

// -------------------------------------------------------------- training ---

struct TrainOptions {
  fs::path out_dir;
  std::optional<fs::path> resume_from;  ///< continue from this checkpoint
  std::ostream* progress = nullptr;     ///< human-readable progress lines
  bool record_wall_time = true;         ///< include wall_time in log records
};

struct TrainSummary {
  std::int64_t steps = 0;
  double best_metric = 0;  ///< stage 1: validation mIoU
  double first_loss = 0;   ///< total loss of the first step run in this call
  double last_loss = 0;    ///< total loss of the last step
  fs::path best_checkpoint;
  fs::path last_checkpoint;
};

/// Thrown when a loss turns non-finite; the batch is dumped to nan_dump.json.
class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optimizes the correspondence network under the stage-1 objective. Writes
/// stage1_log.jsonl, stage1_last.ckpt and stage1_best.ckpt (best validation
/// mIoU) into the output directory.
TrainSummary train_stage1(const Config& config, const fs::path& dataset, const TrainOptions& options);

/// Trains generator and discriminator on garments warped by a frozen
/// stage-1 network. Writes stage2_log.jsonl and stage2.ckpt, which embeds the
/// stage-1 parameters.
TrainSummary train_stage2(const Config& config, const fs::path& dataset,
                          const fs::path& stage1_checkpoint, const TrainOptions& options);

// ------------------------------------------------------------ evaluation ---

/// Warps every sample's garment and mask with the final predicted flow and
/// scores it against the ground-truth warp. Unreadable samples are recorded
/// with an error and skipped.
EvalReport evaluate_split(const fs::path& checkpoint, const fs::path& dataset, const std::string& split);
EvalReport evaluate_split(Stage1Model& model, const fs::path& dataset, const std::string& split);

struct TryOnScore {
  std::size_t count = 0;
  double mean_garment_l1 = 0;  ///< masked L1 over target garment pixels
  double min_value = 0;
  double max_value = 0;
  bool all_finite = true;
};

/// Try-on quality on identity pairs (each sample's source paired with itself).
TryOnScore evaluate_tryon_identity(Stage2Model& model, const fs::path& dataset,
                                   const std::string& split);

struct TryOnOutputs {
  fs::path tryon;
  std::vector<fs::path> intermediates;
};

/// Dresses the target person of `target_sample` in the garment of
/// `source_sample`. Writes tryon.png plus L + 3 intermediates: one flow
/// visualization per level, the per-level warped garments as one strip, and
/// the coarse warp G'.
TryOnOutputs run_tryon(const fs::path& checkpoint, const fs::path& source_sample,
                       const fs::path& target_sample, const fs::path& out_dir);

/// Standard optical-flow color wheel rendering of a [2, h, w] flow.
Image flow_to_color(const torch::Tensor& flow);

// -------------------------------------------------------------- ablation ---

struct AblationRow {
  std::string variant;
  bool global_correspondence = true;
  bool regularization = true;
  double miou_hard = 0;
  double miou_easy = 0;
};

/// Trains the full model and the three ablations (no 3D regularization, no
/// global correspondence, neither) into `<out>/<variant>`, resuming any
/// unfinished run, and writes ablation.json / ablation.csv.
std::vector<AblationRow> run_ablation(const Config& config, const fs::path& dataset,
                                      const fs::path& out, std::ostream* progress = nullptr);

}  // namespace gclwarp
