#include "gclwarp/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"

namespace gclwarp {

using json = nlohmann::json;

namespace {

constexpr std::int64_t kEvalBatch = 16;

std::string sample_id(const std::string& split, int index) {
  std::ostringstream os;
  os << split << "_" << std::setw(5) << std::setfill('0') << index;
  return os.str();
}

void say(std::ostream* out, const std::string& line) {
  if (out) *out << line << std::endl;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir, "cannot create directory: " + ec.message());
}

// Fisher-Yates with a generator seeded from (seed, epoch), so the batch
// order of any step can be recomputed after a resume.
std::vector<std::int64_t> epoch_permutation(std::uint64_t seed, std::int64_t epoch, std::int64_t n) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::vector<std::int64_t> perm(n);
  for (std::int64_t i = 0; i < n; ++i) perm[i] = i;
  for (std::int64_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::int64_t> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }
  return perm;
}

class BatchSchedule {
 public:
  BatchSchedule(std::uint64_t seed, std::int64_t count, std::int64_t batch)
      : seed_(seed), count_(count), batch_(std::min(batch, count)) {
    if (count_ <= 0) throw std::invalid_argument("training split is empty");
  }

  std::vector<std::int64_t> indices(std::int64_t step) {
    const std::int64_t per_epoch = count_ / batch_;
    const std::int64_t epoch = step / per_epoch;
    if (epoch != cached_epoch_) {
      perm_ = epoch_permutation(seed_, epoch, count_);
      cached_epoch_ = epoch;
    }
    const auto first = perm_.begin() + (step % per_epoch) * batch_;
    return {first, first + batch_};
  }

 private:
  std::uint64_t seed_;
  std::int64_t count_, batch_;
  std::int64_t cached_epoch_ = -1;
  std::vector<std::int64_t> perm_;
};

Batch select(const Batch& all, const std::vector<std::int64_t>& idx) {
  const auto i = torch::tensor(idx, torch::kLong);
  return {all.pose_src.index_select(0, i),     all.pose_tgt.index_select(0, i),
          all.garment.index_select(0, i),      all.garment_mask.index_select(0, i),
          all.gt_flow.index_select(0, i),      all.visibility.index_select(0, i),
          all.gt_warped.index_select(0, i),    all.target_image.index_select(0, i),
          all.target_garment_mask.index_select(0, i)};
}

Batch slice(const Batch& all, std::int64_t begin, std::int64_t end) {
  return {all.pose_src.slice(0, begin, end),     all.pose_tgt.slice(0, begin, end),
          all.garment.slice(0, begin, end),      all.garment_mask.slice(0, begin, end),
          all.gt_flow.slice(0, begin, end),      all.visibility.slice(0, begin, end),
          all.gt_warped.slice(0, begin, end),    all.target_image.slice(0, begin, end),
          all.target_garment_mask.slice(0, begin, end)};
}

class JsonlLog {
 public:
  JsonlLog(const fs::path& path, bool append) : path_(path) {
    out_.open(path, append ? std::ios::app : std::ios::trunc);
    if (!out_) throw IoError(path, "cannot open log");
  }
  void write(const json& record) {
    out_ << record.dump() << "\n";
    out_.flush();
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

json terms_json(const LossBreakdown& b) {
  json j = json::object();
  for (const auto& [k, v] : b.values()) j[k] = v;
  return j;
}

void check_finite(const torch::Tensor& loss, std::int64_t step, int stage,
                  const std::vector<std::string>& batch_ids, const fs::path& out_dir) {
  if (std::isfinite(loss.item<double>())) return;
  json dump{{"stage", stage}, {"step", step}, {"loss", "non-finite"}, {"batch_ids", batch_ids}};
  std::ofstream(out_dir / "nan_dump.json") << dump.dump(2) << "\n";
  throw NonFiniteLoss("non-finite loss at stage " + std::to_string(stage) + " step " +
                      std::to_string(step) + "; batch written to " +
                      (out_dir / "nan_dump.json").string());
}

std::vector<std::string> ids_of(const std::vector<DatasetEntry>& entries,
                                const std::vector<std::int64_t>& idx) {
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(entries[i].id);
  return out;
}

Stage1Targets targets_of(const Batch& b) { return {b.garment, b.gt_flow, b.visibility, b.gt_warped}; }

torch::optim::Adam make_adam(const std::vector<torch::Tensor>& params, const OptimizerSettings& o) {
  return torch::optim::Adam(params, torch::optim::AdamOptions(o.learning_rate).betas({o.beta1, o.beta2}));
}

CorrespondenceNet build_net(const Config& config) {
  torch::manual_seed(config.seed);
  return CorrespondenceNet(config);
}

void freeze(torch::nn::Module& m) {
  for (auto& p : m.parameters()) p.set_requires_grad(false);
  m.eval();
}

// Warped garment and mask at full resolution for every sample of `batch`.
struct WarpPrediction {
  torch::Tensor garment;  ///< [B, 3, H, W]
  torch::Tensor mask;     ///< [B, 1, H, W], binarized at 0.5
};

WarpPrediction predict_warp(CorrespondenceNet& net, const Batch& b) {
  torch::NoGradGuard no_grad;
  const auto out = net->forward(b.pose_src, b.garment, b.pose_tgt);
  const auto flow = net->full_resolution_flow(out);
  return {bilinear_warp(b.garment, flow), (bilinear_warp(b.garment_mask, flow) > 0.5).to(torch::kFloat)};
}

std::vector<SampleScore> score_batch(CorrespondenceNet& net, const Batch& all,
                                     const std::vector<std::string>& ids, PerceptualExtractor& extractor) {
  std::vector<SampleScore> scores;
  const std::int64_t n = all.size();
  for (std::int64_t begin = 0; begin < n; begin += kEvalBatch) {
    const auto end = std::min(n, begin + kEvalBatch);
    const auto b = slice(all, begin, end);
    const auto pred = predict_warp(net, b);
    torch::NoGradGuard no_grad;
    for (std::int64_t i = 0; i < end - begin; ++i) {
      SampleScore s;
      s.id = ids[begin + i];
      const auto vis = b.visibility[i];
      s.miou = miou(pred.mask[i][0], vis[0]);
      s.l1_masked = masked_l1(pred.garment[i], b.gt_warped[i], vis[0]);
      s.perceptual_proxy =
          perceptual_distance((pred.garment[i] * vis).unsqueeze(0), (b.gt_warped[i] * vis).unsqueeze(0),
                              extractor)
              .item<double>();
      scores.push_back(std::move(s));
    }
  }
  return scores;
}

double mean_miou(const std::vector<SampleScore>& scores) {
  if (scores.empty()) return 0.0;
  double sum = 0;
  for (const auto& s : scores) sum += s.miou;
  return sum / static_cast<double>(scores.size());
}

Checkpoint stage1_checkpoint(const Config& config, std::int64_t step, double best,
                             CorrespondenceNet& net, const std::vector<torch::Tensor>& params,
                             torch::optim::Adam* adam) {
  Checkpoint c;
  c.stage = 1;
  c.step = step;
  c.best_metric = best;
  c.config_json = config.to_json();
  store_module(c, "corr", *net);
  if (adam) store_adam(c, "adam", params, *adam);
  return c;
}

}  // namespace

// ---------------------------------------------------------------- data ----

std::vector<DatasetEntry> plan_dataset(const Config& config) {
  if (config.count_train < 0 || config.count_test < 0 || config.count_hard < 0)
    throw std::invalid_argument("sample counts must be non-negative");
  std::vector<DatasetEntry> entries;
  std::uint64_t running = 0;
  auto add = [&](const std::string& split, int index, Difficulty d) {
    DatasetEntry e;
    e.id = sample_id(split, index);
    e.split = split;
    e.seed = (config.data_seed << 20) + running;
    e.texture_seed = e.seed ^ 0x9e3779b97f4a7c15ULL;
    e.difficulty = d;
    entries.push_back(e);
    ++running;
  };
  const double frac = config.train_hard_fraction;
  for (int i = 0; i < config.count_train; ++i) {
    // Spread the hard pairs evenly through the split.
    const bool hard = std::floor((i + 1) * frac) > std::floor(i * frac);
    add("train", i, hard ? Difficulty::hard : Difficulty::easy);
  }
  for (int i = 0; i < config.count_test; ++i) add("test", i, Difficulty::easy);
  for (int i = 0; i < config.count_hard; ++i) add("hardpose", i, Difficulty::hard);
  return entries;
}

Manifest generate_dataset(const Config& config, const fs::path& root) {
  config.validate();
  const auto entries = plan_dataset(config);
  ensure_dir(root);
  Manifest m{config.image_height, config.image_width, {}};
  for (const auto& e : entries) {
    const auto s = generate_sample(e, config.image_height, config.image_width, config.downscale);
    write_sample(sample_dir(root, e), s);
    m.entries.push_back(e);
  }
  write_manifest(root, m);
  return m;
}

LoadedSplit load_split(const fs::path& root, const std::string& split) {
  const auto manifest = read_manifest(root);
  LoadedSplit out;
  out.entries = manifest.split(split);
  for (const auto& e : out.entries) out.samples.push_back(read_sample(sample_dir(root, e)));
  return out;
}

// ---------------------------------------------------------------- models ---

Stage1Model load_stage1(const fs::path& checkpoint) {
  const auto c = load_checkpoint(checkpoint);
  Stage1Model m{Config::from_json(c.config_json), nullptr};
  m.net = CorrespondenceNet(m.config);
  restore_module(c, "corr", *m.net);
  freeze(*m.net);
  return m;
}

Stage2Model load_stage2(const fs::path& checkpoint) {
  const auto c = load_checkpoint(checkpoint);
  if (c.stage != 2) throw IoError(checkpoint, "not a stage-2 checkpoint");
  Stage2Model m;
  m.config = Config::from_json(c.config_json);
  m.net = CorrespondenceNet(m.config);
  m.generator = TryOnGenerator(m.config.generator_widths);
  m.discriminator = PatchDiscriminator(m.config.discriminator_width);
  restore_module(c, "corr", *m.net);
  restore_module(c, "gen", *m.generator);
  restore_module(c, "disc", *m.discriminator);
  freeze(*m.net);
  m.generator->eval();
  return m;
}

// -------------------------------------------------------------- training ---

TrainSummary train_stage1(const Config& config, const fs::path& dataset, const TrainOptions& options) {
  config.validate();
  ensure_dir(options.out_dir);
  auto train = load_split(dataset, "train");
  if (train.samples.empty()) throw std::invalid_argument("dataset has no training samples");

  // The tail of the train split is held out for checkpoint selection.
  const auto n_all = static_cast<std::int64_t>(train.samples.size());
  auto n_val = static_cast<std::int64_t>(std::floor(n_all * config.val_fraction));
  if (n_val >= n_all) n_val = 0;
  const std::int64_t n_train = n_all - n_val;
  const auto all = make_batch(train.samples);
  const auto fit = slice(all, 0, n_train);
  const auto val = slice(all, n_train, n_all);
  std::vector<std::string> val_ids;
  for (auto i = n_train; i < n_all; ++i) val_ids.push_back(train.entries[i].id);
  train.samples.clear();

  auto net = build_net(config);
  PerceptualExtractor extractor(config.perceptual_seed);
  const auto params = net->parameters();
  auto adam = make_adam(params, config.optimizer);
  const Stage1LossOptions loss_options{config.weights, config.mask_appearance_terms};

  TrainSummary summary;
  summary.best_checkpoint = options.out_dir / "stage1_best.ckpt";
  summary.last_checkpoint = options.out_dir / "stage1_last.ckpt";
  std::int64_t step = 0;
  double best = -1.0;
  if (options.resume_from) {
    const auto c = load_checkpoint(*options.resume_from);
    if (c.stage != 1) throw IoError(*options.resume_from, "not a stage-1 checkpoint");
    restore_module(c, "corr", *net);
    restore_adam(c, "adam", params, adam);
    step = c.step;
    best = c.best_metric;
  }
  JsonlLog log(options.out_dir / "stage1_log.jsonl", options.resume_from.has_value());
  BatchSchedule schedule(config.seed, n_train, config.optimizer.batch_size);
  const auto t0 = std::chrono::steady_clock::now();

  auto evaluate_and_save = [&](std::int64_t at) {
    double metric = 0;
    if (n_val > 0) {
      net->eval();
      metric = mean_miou(score_batch(net, val, val_ids, extractor));
      net->train();
    }
    json rec{{"step", at}, {"stage", 1}, {"val_miou", metric}};
    if (options.record_wall_time)
      rec["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.write(rec);
    say(options.progress, "step " + std::to_string(at) + " val mIoU " + std::to_string(metric));
    if (metric > best) {
      best = metric;
      save_checkpoint(summary.best_checkpoint, stage1_checkpoint(config, at, best, net, params, nullptr));
    }
    save_checkpoint(summary.last_checkpoint, stage1_checkpoint(config, at, best, net, params, &adam));
  };

  net->train();
  bool first = true;
  while (step < config.stage1_steps) {
    const auto idx = schedule.indices(step);
    const auto b = select(fit, idx);
    const auto out = net->forward(b.pose_src, b.garment, b.pose_tgt);
    const auto loss = stage1_loss(out.correspondence, out.flows, targets_of(b), net->grid(), loss_options,
                                  extractor);
    check_finite(loss.total, step, 1, ids_of(train.entries, idx), options.out_dir);
    adam.zero_grad();
    loss.total.backward();
    adam.step();
    ++step;

    const double total = loss.total.item<double>();
    if (first) summary.first_loss = total;
    first = false;
    summary.last_loss = total;
    if (step == 1 || step % config.log_every == 0 || step == config.stage1_steps) {
      json rec{{"step", step}, {"stage", 1}, {"total", total}, {"terms", terms_json(loss)}};
      if (options.record_wall_time)
        rec["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log.write(rec);
      say(options.progress, "step " + std::to_string(step) + " loss " + std::to_string(total));
    }
    if (step % config.eval_every == 0 || step == config.stage1_steps) evaluate_and_save(step);
  }
  if (!fs::exists(summary.last_checkpoint)) evaluate_and_save(step);
  summary.steps = step;
  summary.best_metric = best;
  return summary;
}

TrainSummary train_stage2(const Config& config, const fs::path& dataset,
                          const fs::path& stage1_checkpoint_path, const TrainOptions& options) {
  config.validate();
  ensure_dir(options.out_dir);
  const auto c1 = load_checkpoint(stage1_checkpoint_path);

  // Network structure comes from the stage-1 run; stage-2 settings from `config`.
  Config merged = Config::from_json(c1.config_json);
  merged.generator_widths = config.generator_widths;
  merged.discriminator_width = config.discriminator_width;
  merged.optimizer = config.optimizer;
  merged.stage2_steps = config.stage2_steps;
  merged.log_every = config.log_every;
  merged.seed = config.seed;
  merged.weights.adv = config.weights.adv;
  merged.weights.l1_gen = config.weights.l1_gen;
  merged.weights.perc_gen = config.weights.perc_gen;
  merged.validate();

  CorrespondenceNet net(merged);
  restore_module(c1, "corr", *net);
  freeze(*net);
  const auto frozen_hash = parameter_fingerprint(*net);

  auto train = load_split(dataset, "train");
  if (train.samples.empty()) throw std::invalid_argument("dataset has no training samples");
  const auto all = make_batch(train.samples);
  train.samples.clear();
  const std::int64_t n = all.size();

  // The stage-1 network is frozen, so G' and the agnostic inputs are fixed.
  std::vector<torch::Tensor> warped_parts;
  for (std::int64_t begin = 0; begin < n; begin += kEvalBatch)
    warped_parts.push_back(predict_warp(net, slice(all, begin, std::min(n, begin + kEvalBatch))).garment);
  const auto warped = torch::cat(warped_parts);
  const auto agnostic = make_agnostic(all.target_image, all.target_garment_mask);

  torch::manual_seed(merged.seed);
  TryOnGenerator gen(merged.generator_widths);
  PatchDiscriminator disc(merged.discriminator_width);
  PerceptualExtractor extractor(merged.perceptual_seed);
  const auto g_params = gen->parameters();
  const auto d_params = disc->parameters();
  auto adam_g = make_adam(g_params, merged.optimizer);
  auto adam_d = make_adam(d_params, merged.optimizer);

  TrainSummary summary;
  summary.last_checkpoint = summary.best_checkpoint = options.out_dir / "stage2.ckpt";
  std::int64_t step = 0;
  if (options.resume_from) {
    const auto c = load_checkpoint(*options.resume_from);
    if (c.stage != 2) throw IoError(*options.resume_from, "not a stage-2 checkpoint");
    restore_module(c, "gen", *gen);
    restore_module(c, "disc", *disc);
    restore_adam(c, "adam_g", g_params, adam_g);
    restore_adam(c, "adam_d", d_params, adam_d);
    step = c.step;
  }
  JsonlLog log(options.out_dir / "stage2_log.jsonl", options.resume_from.has_value());
  BatchSchedule schedule(merged.seed, n, merged.optimizer.batch_size);
  const auto t0 = std::chrono::steady_clock::now();

  auto save = [&] {
    if (parameter_fingerprint(*net) != frozen_hash)
      throw std::logic_error("stage-1 parameters changed during stage-2 training");
    Checkpoint c;
    c.stage = 2;
    c.step = step;
    c.config_json = merged.to_json();
    store_module(c, "corr", *net);
    store_module(c, "gen", *gen);
    store_module(c, "disc", *disc);
    store_adam(c, "adam_g", g_params, adam_g);
    store_adam(c, "adam_d", d_params, adam_d);
    save_checkpoint(summary.last_checkpoint, c);
  };

  gen->train();
  disc->train();
  bool first = true;
  while (step < merged.stage2_steps) {
    const auto idx = schedule.indices(step);
    const auto i = torch::tensor(idx, torch::kLong);
    const auto agn = agnostic.index_select(0, i);
    const auto gp = warped.index_select(0, i);
    const auto target = all.target_image.index_select(0, i);

    // One discriminator step, then one generator step against the updated D.
    const auto generated = gen->forward(agn, gp);
    const auto real_logits = disc->forward(target, gp);
    const auto fake_logits = disc->forward(generated.detach(), gp);
    const auto d_loss = discriminator_loss(real_logits, fake_logits);
    check_finite(d_loss, step, 2, ids_of(train.entries, idx), options.out_dir);
    adam_d.zero_grad();
    d_loss.backward();
    adam_d.step();

    const auto fake_for_g = disc->forward(generated, gp);
    const auto losses = stage2_losses(generated, target, fake_for_g, real_logits.detach(),
                                      fake_logits.detach(), merged.weights, extractor);
    check_finite(losses.generator.total, step, 2, ids_of(train.entries, idx), options.out_dir);
    adam_g.zero_grad();
    losses.generator.total.backward();
    adam_g.step();
    ++step;

    const double total = losses.generator.total.item<double>();
    if (first) summary.first_loss = total;
    first = false;
    summary.last_loss = total;
    if (step == 1 || step % merged.log_every == 0 || step == merged.stage2_steps) {
      json rec{{"step", step},
               {"stage", 2},
               {"total", total},
               {"terms", terms_json(losses.generator)},
               {"discriminator", d_loss.item<double>()}};
      if (options.record_wall_time)
        rec["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log.write(rec);
      say(options.progress, "step " + std::to_string(step) + " generator loss " + std::to_string(total));
    }
    if (step % std::max(1, merged.eval_every) == 0) save();
  }
  save();
  summary.steps = step;
  return summary;
}

// ------------------------------------------------------------ evaluation ---

EvalReport evaluate_split(Stage1Model& model, const fs::path& dataset, const std::string& split) {
  const auto manifest = read_manifest(dataset);
  EvalReport report;
  report.split = split;
  std::vector<SceneSample> good;
  std::vector<std::string> good_ids;
  std::vector<SampleScore> failed;
  for (const auto& e : manifest.split(split)) {
    try {
      good.push_back(read_sample(sample_dir(dataset, e)));
      good_ids.push_back(e.id);
    } catch (const std::exception& ex) {
      SampleScore s;
      s.id = e.id;
      s.error = ex.what();
      failed.push_back(std::move(s));
    }
  }
  PerceptualExtractor extractor(model.config.perceptual_seed);
  std::vector<SampleScore> scored;
  if (!good.empty()) scored = score_batch(model.net, make_batch(good), good_ids, extractor);

  // Keep manifest order in the report.
  std::size_t gi = 0, fi = 0;
  for (const auto& e : manifest.split(split)) {
    if (gi < scored.size() && scored[gi].id == e.id)
      report.samples.push_back(scored[gi++]);
    else
      report.samples.push_back(failed[fi++]);
  }
  return report;
}

EvalReport evaluate_split(const fs::path& checkpoint, const fs::path& dataset, const std::string& split) {
  auto model = load_stage1(checkpoint);
  return evaluate_split(model, dataset, split);
}

TryOnScore evaluate_tryon_identity(Stage2Model& model, const fs::path& dataset, const std::string& split) {
  const auto loaded = load_split(dataset, split);
  TryOnScore score;
  score.min_value = std::numeric_limits<double>::infinity();
  score.max_value = -std::numeric_limits<double>::infinity();
  double l1_sum = 0;
  torch::NoGradGuard no_grad;
  for (std::size_t begin = 0; begin < loaded.samples.size(); begin += kEvalBatch) {
    const auto end = std::min(loaded.samples.size(), begin + kEvalBatch);
    std::vector<SceneSample> pairs;
    for (auto i = begin; i < end; ++i) pairs.push_back(make_identity_pair(loaded.samples[i]));
    const auto b = make_batch(pairs);
    const auto gp = predict_warp(model.net, b).garment;
    const auto out = model.generator->forward(make_agnostic(b.target_image, b.target_garment_mask), gp);
    score.all_finite = score.all_finite && torch::isfinite(out).all().item<bool>();
    score.min_value = std::min(score.min_value, out.min().item<double>());
    score.max_value = std::max(score.max_value, out.max().item<double>());
    for (std::int64_t i = 0; i < b.size(); ++i)
      l1_sum += masked_l1(out[i], b.target_image[i], b.target_garment_mask[i][0]);
    score.count += pairs.size();
  }
  if (score.count > 0) score.mean_garment_l1 = l1_sum / static_cast<double>(score.count);
  return score;
}

Image flow_to_color(const torch::Tensor& flow) {
  TORCH_CHECK(flow.dim() == 3 && flow.size(0) == 2, "flow_to_color: expected [2, h, w]");
  // Color wheel segments: red-yellow, yellow-green, green-cyan, cyan-blue,
  // blue-magenta, magenta-red.
  static const std::vector<std::array<float, 3>> wheel = [] {
    const int segs[6] = {15, 6, 4, 11, 13, 6};
    std::vector<std::array<float, 3>> w;
    auto ramp = [&](int n, auto fn) {
      for (int i = 0; i < n; ++i) w.push_back(fn(static_cast<float>(i) / n));
    };
    ramp(segs[0], [](float t) { return std::array<float, 3>{1, t, 0}; });
    ramp(segs[1], [](float t) { return std::array<float, 3>{1 - t, 1, 0}; });
    ramp(segs[2], [](float t) { return std::array<float, 3>{0, 1, t}; });
    ramp(segs[3], [](float t) { return std::array<float, 3>{0, 1 - t, 1}; });
    ramp(segs[4], [](float t) { return std::array<float, 3>{t, 0, 1}; });
    ramp(segs[5], [](float t) { return std::array<float, 3>{1, 0, 1 - t}; });
    return w;
  }();
  const auto f = flow.detach().to(torch::kFloat).contiguous();
  const auto a = f.accessor<float, 3>();
  const int h = static_cast<int>(f.size(1)), w = static_cast<int>(f.size(2));
  float max_rad = 1e-6f;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) max_rad = std::max(max_rad, std::hypot(a[0][y][x], a[1][y][x]));
  const int ncols = static_cast<int>(wheel.size());
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float u = a[0][y][x] / max_rad, v = a[1][y][x] / max_rad;
      const float rad = std::min(1.0f, std::hypot(u, v));
      const float angle = std::atan2(-v, -u) / std::numbers::pi_v<float>;
      const float fk = (angle + 1) / 2 * static_cast<float>(ncols - 1);
      const int k0 = static_cast<int>(std::floor(fk));
      const int k1 = (k0 + 1) % ncols;
      const float t = fk - static_cast<float>(k0);
      for (int c = 0; c < 3; ++c) {
        const float col = (1 - t) * wheel[k0][c] + t * wheel[k1][c];
        img.at(x, y, c) = 1 - rad * (1 - col);
      }
    }
  return img;
}

TryOnOutputs run_tryon(const fs::path& checkpoint, const fs::path& source_sample,
                       const fs::path& target_sample, const fs::path& out_dir) {
  for (const auto& p : {checkpoint, source_sample, target_sample})
    if (!fs::exists(p)) throw IoError(p, "does not exist");
  auto model = load_stage2(checkpoint);
  const auto src = read_sample(source_sample);
  const auto tgt = read_sample(target_sample);
  if (src.height() != tgt.height() || src.width() != tgt.width())
    throw std::invalid_argument("source and target samples differ in size");
  ensure_dir(out_dir);

  torch::NoGradGuard no_grad;
  const auto pose_src = pose_to_tensor(src.pose_src).unsqueeze(0);
  const auto pose_tgt = pose_to_tensor(tgt.pose_tgt).unsqueeze(0);
  const auto garment = image_to_tensor(src.garment).unsqueeze(0);
  const auto target_image = image_to_tensor(tgt.target_image).unsqueeze(0);
  const auto target_mask = mask_to_tensor(garment_region(tgt.pose_tgt)).unsqueeze(0);

  auto& net = model.net;
  const auto out = net->forward(pose_src, garment, pose_tgt);
  const auto& grid = net->grid();
  TryOnOutputs written;
  for (const auto& f : out.flows) {
    const auto path = out_dir / ("flow_level" + std::to_string(f.level) + ".png");
    write_png(path, flow_to_color(f.uv[0]));
    written.intermediates.push_back(path);
  }
  // Per-level warped garments side by side, each upsampled to full size.
  std::vector<torch::Tensor> strip;
  for (const auto& f : out.flows) {
    const auto g_l = resize_to_level(garment, FieldKind::image, grid, f.level);
    const auto w_l = bilinear_warp(g_l, f);
    strip.push_back(torch::nn::functional::interpolate(
        w_l, torch::nn::functional::InterpolateFuncOptions()
                 .size(std::vector<std::int64_t>{garment.size(2), garment.size(3)})
                 .mode(torch::kNearest)));
  }
  const auto strip_path = out_dir / "warped_levels.png";
  write_png(strip_path, tensor_to_image(torch::cat(strip, 3)[0].clamp(0, 1)));
  written.intermediates.push_back(strip_path);

  const auto g_base = resize_to_level(garment, FieldKind::image, grid, 0);
  const auto coarse = out.correspondence.weights.defined()
                          ? coarse_warp(out.correspondence, g_base)
                          : bilinear_warp(g_base, out.flows.front());
  const auto coarse_path = out_dir / "coarse_warp.png";
  write_png(coarse_path, tensor_to_image(coarse[0].clamp(0, 1)));
  written.intermediates.push_back(coarse_path);

  const auto warped = bilinear_warp(garment, net->full_resolution_flow(out));
  const auto result = model.generator->forward(make_agnostic(target_image, target_mask), warped);
  written.tryon = out_dir / "tryon.png";
  write_png(written.tryon, tensor_to_image(result[0]));
  return written;
}

// -------------------------------------------------------------- ablation ---

std::vector<AblationRow> run_ablation(const Config& config, const fs::path& dataset, const fs::path& out,
                                      std::ostream* progress) {
  struct Variant {
    const char* name;
    bool global;
    bool reg;
  };
  const Variant variants[] = {
      {"full", true, true}, {"no_3d_reg", true, false}, {"no_global", false, true}, {"neither", false, false}};
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    Config c = config;
    c.use_global_correspondence = v.global;
    if (!v.reg) c.weights.reg = 0.0;
    TrainOptions opts;
    opts.out_dir = out / v.name;
    opts.progress = progress;
    const auto last = opts.out_dir / "stage1_last.ckpt";
    bool done = false;
    if (fs::exists(last)) {
      const auto ck = load_checkpoint(last);
      done = ck.step >= c.stage1_steps;
      if (!done) opts.resume_from = last;
    }
    say(progress, std::string("ablation variant ") + v.name + (done ? " (already trained)" : ""));
    if (!done) train_stage1(c, dataset, opts);
    auto model = load_stage1(opts.out_dir / "stage1_best.ckpt");
    AblationRow row{v.name, v.global, v.reg, 0, 0};
    row.miou_hard = evaluate_split(model, dataset, "hardpose").mean_miou();
    row.miou_easy = evaluate_split(model, dataset, "test").mean_miou();
    rows.push_back(row);
  }

  json table = json::array();
  std::ofstream csv(out / "ablation.csv");
  if (!csv) throw IoError(out / "ablation.csv", "cannot open for writing");
  csv << "variant,global_correspondence,regularization,miou_hard,miou_easy\n";
  csv << std::setprecision(17);
  for (const auto& r : rows) {
    table.push_back({{"variant", r.variant},
                     {"global_correspondence", r.global_correspondence},
                     {"regularization", r.regularization},
                     {"miou_hard", r.miou_hard},
                     {"miou_easy", r.miou_easy}});
    csv << r.variant << "," << r.global_correspondence << "," << r.regularization << "," << r.miou_hard
        << "," << r.miou_easy << "\n";
  }
  std::ofstream(out / "ablation.json") << table.dump(2) << "\n";
  return rows;
}

}  // namespace gclwarp
