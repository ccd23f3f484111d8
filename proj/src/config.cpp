#include "gclwarp/config.hpp"

#include <bit>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gclwarp/dataset_io.hpp"
#include "json.hpp"

namespace gclwarp {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LossWeights, reg, l1_corr, perc_corr, adv, l1_gen,
                                                perc_gen)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(OptimizerSettings, learning_rate, beta1, beta2,
                                                batch_size)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    Config, image_height, image_width, count_train, count_test, count_hard, train_hard_fraction,
    data_seed, dataset_root, downscale, levels, encoder_widths, temperature, gru_hidden,
    gru_iterations, use_global_correspondence, mask_appearance_terms, correlation_budget_bytes,
    perceptual_seed, weights, generator_widths, discriminator_width, optimizer, seed, stage1_steps,
    stage2_steps, log_every, eval_every, val_fraction)

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("config: " + what);
}

/// Rejects keys that the defaults do not have, recursing into objects.
void check_keys(const nlohmann::json& given, const nlohmann::json& known, const std::string& where) {
  for (auto it = given.begin(); it != given.end(); ++it) {
    if (!known.contains(it.key()))
      throw std::invalid_argument("config: unknown key '" + where + it.key() + "'");
    if (it->is_object() && known.at(it.key()).is_object())
      check_keys(*it, known.at(it.key()), where + it.key() + ".");
  }
}

}  // namespace

void Config::validate() const {
  require(image_height > 0 && image_width > 0, "image size must be positive");
  require(downscale > 0 && std::has_single_bit(static_cast<unsigned>(downscale)),
          "downscale must be a power of two");
  require(image_height % downscale == 0 && image_width % downscale == 0,
          "downscale must divide the image size");
  require(levels >= 1, "levels must be >= 1");
  require(static_cast<int>(encoder_widths.size()) ==
              std::countr_zero(static_cast<unsigned>(downscale)),
          "encoder_widths needs one entry per stride-2 block (log2 of downscale)");
  require(levels + 1 <= static_cast<int>(encoder_widths.size()),
          "levels + 1 must not exceed the number of encoder blocks");
  require(temperature > 0, "temperature must be positive");
  require(gru_hidden > 0 && gru_iterations >= 1, "invalid recurrent unit settings");
  require(generator_widths.size() == 3, "generator_widths needs three entries");
  require(count_train >= 0 && count_test >= 0 && count_hard >= 0, "counts must be >= 0");
  require(train_hard_fraction >= 0 && train_hard_fraction <= 1, "train_hard_fraction in [0,1]");
  require(optimizer.learning_rate > 0 && optimizer.batch_size > 0, "invalid optimizer settings");
  require(stage1_steps >= 0 && stage2_steps >= 0, "step counts must be >= 0");
  require(log_every > 0 && eval_every > 0, "log_every and eval_every must be positive");
  require(val_fraction >= 0 && val_fraction < 1, "val_fraction in [0,1)");
  require(correlation_budget_bytes > 0, "correlation budget must be positive");
  weights.validate();
}

std::string Config::to_json() const {
  const nlohmann::json j = *this;
  return j.dump(2);
}

Config Config::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
  }
  require(j.is_object(), "top level must be an object");
  check_keys(j, nlohmann::json(Config{}), "");
  Config c;
  try {
    c = j.get<Config>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void Config::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");
  out << to_json() << "\n";
}

}  // namespace gclwarp
