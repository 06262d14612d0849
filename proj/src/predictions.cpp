#include "mad/predictions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_set>

#include "mad/error.hpp"
#include "text.hpp"

namespace mad {

Confidence Confidence::from_double(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("confidence out of range [0, 1]: " + std::to_string(p));
  return Confidence{static_cast<std::uint32_t>(std::llround(p * kScale))};
}

std::string Confidence::to_string() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%u.%06u", micros / kScale, micros % kScale);
  return buf;
}

void validate_model_id(std::string_view id) {
  if (id.empty() || id == "." || id == ".." || id.find_first_of(" \t/\\,") != std::string_view::npos) {
    throw Error("invalid model id '" + std::string(id) + "'");
  }
}

ModelPredictions parse_prediction_file(std::istream& in, const TaxonomyGraph& graph, std::string_view origin) {
  ModelPredictions out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  const auto where = [&] { return std::string(origin) + ":" + std::to_string(line_no); };

  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (detail::trim(line).empty()) continue;

    if (!have_header) {
      const auto fields = detail::split_ws(line);
      if (fields.size() != 2 || fields[0] != "model")
        throw Error("predictions: expected 'model <model_id>' header at " + where());
      validate_model_id(fields[1]);
      out.model = std::string(fields[1]);
      have_header = true;
      continue;
    }

    const auto fields = detail::split(line, ',');
    if (fields.size() != 3) throw Error("predictions: expected image_id,label_id,confidence at " + where());
    const std::string_view image = detail::trim(fields[0]);
    if (image.empty()) throw Error("predictions: empty image id at " + where());
    if (image.find_first_of(" \t") != std::string_view::npos)
      throw Error("predictions: whitespace in image id at " + where());

    const auto label = graph.find_label(detail::trim(fields[1]));
    if (!label) {
      throw Error("predictions: unknown label '" + std::string(detail::trim(fields[1])) + "' at " + where());
    }
    const auto p = detail::parse_double(detail::trim(fields[2]));
    if (!p) throw Error("predictions: malformed confidence at " + where());
    if (!(*p >= 0.0 && *p <= 1.0)) throw Error("predictions: confidence out of range [0, 1] at " + where());

    if (!seen.emplace(image).second) {
      throw Error("predictions: duplicate record for model " + out.model + ", image " + std::string(image) + " at " +
                  where());
    }
    out.records.push_back({std::string(image), *label, Confidence::from_double(*p)});
  }
  if (!have_header) throw Error("predictions: missing 'model' header in " + std::string(origin));
  return out;
}

ModelPredictions load_prediction_file(const std::filesystem::path& path, const TaxonomyGraph& graph) {
  std::ifstream in(path);
  if (!in) throw Error("predictions: cannot open " + path.string());
  return parse_prediction_file(in, graph, path.string());
}

PredictionTable PredictionTable::assemble(std::vector<ModelPredictions> models) {
  if (models.empty()) throw Error("predictions: no models given");

  PredictionTable table;
  std::unordered_set<std::string> all;
  for (const auto& m : models) {
    for (const auto& r : m.records) all.insert(r.image);
  }
  table.images_.assign(all.begin(), all.end());
  std::sort(table.images_.begin(), table.images_.end());
  for (ImageIndex i = 0; i < table.images_.size(); ++i) table.image_index_.emplace(table.images_[i], i);

  for (auto& m : models) table.append_model(std::move(m));
  return table;
}

PredictionTable PredictionTable::with_model(ModelPredictions model) const {
  PredictionTable copy = *this;
  copy.append_model(std::move(model));
  return copy;
}

void PredictionTable::append_model(ModelPredictions model) {
  validate_model_id(model.model);
  if (find_model(model.model)) throw Error("predictions: duplicate model " + model.model);

  constexpr auto kMissing = ~std::uint32_t{0};
  std::vector<std::uint32_t> labels(images_.size(), kMissing);
  std::vector<std::uint32_t> confidences(images_.size(), 0);
  for (const auto& r : model.records) {
    const auto index = find_image(r.image);
    if (!index) {
      throw Error("predictions: model " + model.model + " has image " + r.image + " missing from the corpus");
    }
    if (labels[*index] != kMissing) {
      throw Error("predictions: duplicate record for model " + model.model + ", image " + r.image);
    }
    labels[*index] = r.label.value;
    confidences[*index] = r.confidence.micros;
  }
  for (ImageIndex i = 0; i < images_.size(); ++i) {
    if (labels[i] == kMissing) throw Error("predictions: model " + model.model + " is missing image " + images_[i]);
  }

  models_.push_back(std::move(model.model));
  labels_.push_back(std::move(labels));
  confidences_.push_back(std::move(confidences));
}

std::optional<ModelIndex> PredictionTable::find_model(std::string_view model) const {
  for (ModelIndex i = 0; i < models_.size(); ++i) {
    if (models_[i] == model) return i;
  }
  return std::nullopt;
}

ModelIndex PredictionTable::model_index(std::string_view model) const {
  if (auto i = find_model(model)) return *i;
  throw Error("unknown model " + std::string(model));
}

std::optional<ImageIndex> PredictionTable::find_image(std::string_view image) const {
  auto it = image_index_.find(std::string(image));
  if (it == image_index_.end()) return std::nullopt;
  return it->second;
}

Prediction PredictionTable::prediction_of(std::string_view model, std::string_view image) const {
  const ModelIndex m = model_index(model);
  const auto i = find_image(image);
  if (!i) throw Error("unknown image " + std::string(image));
  return at(m, *i);
}

std::vector<LabelId> PredictionTable::labels_used() const {
  std::vector<std::uint32_t> raw;
  for (const auto& column : labels_) raw.insert(raw.end(), column.begin(), column.end());
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  std::vector<LabelId> out;
  out.reserve(raw.size());
  for (auto v : raw) out.push_back(LabelId{v});
  return out;
}

PredictionTable load_predictions(const TaxonomyGraph& graph, std::span<const std::filesystem::path> paths) {
  std::vector<ModelPredictions> models;
  models.reserve(paths.size());
  for (const auto& p : paths) models.push_back(load_prediction_file(p, graph));
  return PredictionTable::assemble(std::move(models));
}

}  // namespace mad
