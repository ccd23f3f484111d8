#include "gclwarp/metrics.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "gclwarp/dataset_io.hpp"
#include "json.hpp"

namespace gclwarp {

double miou(const torch::Tensor& pred_mask, const torch::Tensor& gt_mask) {
  TORCH_CHECK(pred_mask.sizes() == gt_mask.sizes(), "miou: shapes ", pred_mask.sizes(), " and ",
              gt_mask.sizes(), " differ");
  const auto p = pred_mask.to(torch::kBool);
  const auto g = gt_mask.to(torch::kBool);
  auto iou = [](const torch::Tensor& a, const torch::Tensor& b) {
    const double uni = (a | b).sum().item<double>();
    if (uni == 0) return 1.0;
    return (a & b).sum().item<double>() / uni;
  };
  return 0.5 * (iou(p, g) + iou(~p, ~g));
}

double masked_l1(const torch::Tensor& pred, const torch::Tensor& gt, const torch::Tensor& mask) {
  TORCH_CHECK(pred.sizes() == gt.sizes(), "masked_l1: shapes ", pred.sizes(), " and ", gt.sizes(),
              " differ");
  const auto m = mask.to(torch::kDouble).reshape({mask.size(-2), mask.size(-1)});
  const double channels = static_cast<double>(pred.numel()) / static_cast<double>(m.numel());
  const double count = m.sum().item<double>() * channels;
  if (count == 0) return 0.0;
  const auto diff = (pred.to(torch::kDouble) - gt.to(torch::kDouble)).abs();
  return (diff * m).sum().item<double>() / count;
}

namespace {

template <typename Get>
double mean_of(const std::vector<SampleScore>& samples, Get get) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& s : samples)
    if (s.error.empty()) {
      sum += get(s);
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace

double EvalReport::mean_miou() const {
  return mean_of(samples, [](const SampleScore& s) { return s.miou; });
}
double EvalReport::mean_l1_masked() const {
  return mean_of(samples, [](const SampleScore& s) { return s.l1_masked; });
}
double EvalReport::mean_perceptual() const {
  return mean_of(samples, [](const SampleScore& s) { return s.perceptual_proxy; });
}
std::size_t EvalReport::evaluated() const {
  std::size_t n = 0;
  for (const auto& s : samples) n += s.error.empty();
  return n;
}

namespace {

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_report(const EvalReport& report, const std::filesystem::path& stem) {
  using nlohmann::json;
  json records = json::array();
  for (const auto& s : report.samples) {
    json r = {{"id", s.id},
              {"miou", s.miou},
              {"l1_masked", s.l1_masked},
              {"perceptual_proxy", s.perceptual_proxy}};
    if (!s.error.empty()) r["error"] = s.error;
    records.push_back(r);
  }
  const json doc = {{"split", report.split},
                    {"count", report.samples.size()},
                    {"evaluated", report.evaluated()},
                    {"mean", {{"miou", report.mean_miou()},
                              {"l1_masked", report.mean_l1_masked()},
                              {"perceptual_proxy", report.mean_perceptual()}}},
                    {"samples", records}};
  auto json_path = stem;
  json_path += ".json";
  std::ofstream js(json_path);
  if (!js) throw IoError(json_path, "cannot open for writing");
  js << doc.dump(2) << "\n";

  auto csv_path = stem;
  csv_path += ".csv";
  std::ofstream csv(csv_path);
  if (!csv) throw IoError(csv_path, "cannot open for writing");
  csv << "id,miou,l1_masked,perceptual_proxy,error\n" << std::setprecision(17);
  for (const auto& s : report.samples)
    csv << s.id << ',' << s.miou << ',' << s.l1_masked << ',' << s.perceptual_proxy << ','
        << csv_field(s.error) << '\n';
}

}  // namespace gclwarp
