#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gclwarp/pipeline.hpp"
#include "json.hpp"

using namespace gclwarp;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string dataset;
  std::string checkpoint;
  std::string split = "test";
};

Config load_config(const Common& c) {
  Config cfg = c.config_path.empty() ? Config{} : Config::load(c.config_path);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.data_seed = *c.seed;
  }
  cfg.validate();
  return cfg;
}

fs::path dataset_of(const Common& c, const Config& cfg) {
  if (!c.dataset.empty()) return c.dataset;
  if (!cfg.dataset_root.empty()) return cfg.dataset_root;
  throw std::invalid_argument("no dataset given (use --dataset or dataset_root in the config)");
}

void add_common(CLI::App* app, Common& c, bool needs_checkpoint) {
  app->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "seed for data generation and training");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--dataset", c.dataset, "dataset root");
  auto* ck = app->add_option("--checkpoint", c.checkpoint, "checkpoint path");
  if (needs_checkpoint) ck->required();
  app->add_option("--split", c.split, "dataset split (train, test, hardpose)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gclwarp: 3D-aware garment warping and try-on"};
  app.require_subcommand(1);

  Common gen_c, s1_c, s2_c, try_c, eval_c, abl_c;
  std::optional<int> count_train, count_test, count_hard;
  std::string resume1, resume2, source_dir, target_dir;

  auto* gen = app.add_subcommand("generate-data", "render the synthetic dataset");
  add_common(gen, gen_c, false);
  gen->add_option("--count-train", count_train, "training pairs");
  gen->add_option("--count-test", count_test, "easy test pairs");
  gen->add_option("--count-hard", count_hard, "hard-pose test pairs");

  auto* s1 = app.add_subcommand("train-stage1", "train the correspondence network");
  add_common(s1, s1_c, false);
  s1->add_option("--resume", resume1, "continue from a stage-1 checkpoint")->check(CLI::ExistingFile);

  auto* s2 = app.add_subcommand("train-stage2", "train the try-on generator on a frozen stage 1");
  add_common(s2, s2_c, true);
  s2->add_option("--resume", resume2, "continue from a stage-2 checkpoint")->check(CLI::ExistingFile);

  auto* tr = app.add_subcommand("tryon", "dress a target person in a source garment");
  add_common(tr, try_c, true);
  tr->add_option("--source", source_dir, "source sample directory")->required();
  tr->add_option("--target", target_dir, "target sample directory")->required();

  auto* ev = app.add_subcommand("evaluate", "score warped garments on a split");
  add_common(ev, eval_c, true);

  auto* ab = app.add_subcommand("ablate", "train and compare the four ablation variants");
  add_common(ab, abl_c, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      auto cfg = load_config(gen_c);
      if (count_train) cfg.count_train = *count_train;
      if (count_test) cfg.count_test = *count_test;
      if (count_hard) cfg.count_hard = *count_hard;
      const fs::path root = gen_c.dataset.empty() ? fs::path(gen_c.out) : fs::path(gen_c.dataset);
      const auto m = generate_dataset(cfg, root);
      std::cout << "wrote " << m.entries.size() << " samples to " << root.string() << " (train "
                << m.split("train").size() << ", test " << m.split("test").size() << ", hardpose "
                << m.split("hardpose").size() << ")\n";
    } else if (s1->parsed()) {
      const auto cfg = load_config(s1_c);
      TrainOptions opts;
      opts.out_dir = s1_c.out;
      opts.progress = &std::cout;
      if (!resume1.empty()) opts.resume_from = resume1;
      const auto s = train_stage1(cfg, dataset_of(s1_c, cfg), opts);
      std::cout << "stage 1 done after " << s.steps << " steps, best val mIoU " << s.best_metric << "\n";
    } else if (s2->parsed()) {
      const auto cfg = load_config(s2_c);
      TrainOptions opts;
      opts.out_dir = s2_c.out;
      opts.progress = &std::cout;
      if (!resume2.empty()) opts.resume_from = resume2;
      const auto s = train_stage2(cfg, dataset_of(s2_c, cfg), s2_c.checkpoint, opts);
      std::cout << "stage 2 done after " << s.steps << " steps -> " << s.last_checkpoint.string() << "\n";
    } else if (tr->parsed()) {
      const auto out = run_tryon(try_c.checkpoint, source_dir, target_dir, try_c.out);
      std::cout << "wrote " << out.tryon.string() << " and " << out.intermediates.size()
                << " intermediate images\n";
    } else if (ev->parsed()) {
      const auto ckpt = load_checkpoint(eval_c.checkpoint);
      const auto cfg = Config::from_json(ckpt.config_json);
      const auto dataset = dataset_of(eval_c, cfg);
      const fs::path out = eval_c.out;
      fs::create_directories(out);
      const auto report = evaluate_split(eval_c.checkpoint, dataset, eval_c.split);
      write_report(report, out / ("eval_" + eval_c.split));
      std::cout << eval_c.split << ": " << report.evaluated() << " samples, mIoU " << report.mean_miou()
                << ", masked L1 " << report.mean_l1_masked() << "\n";
      if (ckpt.stage == 2) {
        auto model = load_stage2(eval_c.checkpoint);
        const auto t = evaluate_tryon_identity(model, dataset, eval_c.split);
        nlohmann::json j{{"split", eval_c.split},       {"count", t.count},
                         {"mean_garment_l1", t.mean_garment_l1}, {"min_value", t.min_value},
                         {"max_value", t.max_value},    {"all_finite", t.all_finite}};
        std::ofstream(out / ("tryon_identity_" + eval_c.split + ".json")) << j.dump(2) << "\n";
        std::cout << "identity try-on masked L1 " << t.mean_garment_l1 << "\n";
      }
    } else if (ab->parsed()) {
      const auto cfg = load_config(abl_c);
      const auto rows = run_ablation(cfg, dataset_of(abl_c, cfg), abl_c.out, &std::cout);
      for (const auto& r : rows)
        std::cout << r.variant << "  hard mIoU " << r.miou_hard << "  easy mIoU " << r.miou_easy << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
