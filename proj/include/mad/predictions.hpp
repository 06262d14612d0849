#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mad/taxonomy.hpp"
#include "mad/types.hpp"

namespace mad {

// Position of an image in the corpus. The corpus is kept sorted by image id,
// so ascending ImageIndex is ascending ImageId.
using ImageIndex = std::uint32_t;

struct PredictionRecord {
  std::string image;
  LabelId label;
  Confidence confidence;
};

// Contents of one per-model prediction file.
struct ModelPredictions {
  std::string model;
  std::vector<PredictionRecord> records;
};

ModelPredictions parse_prediction_file(std::istream& in, const TaxonomyGraph& graph,
                                       std::string_view origin = "<stream>");
ModelPredictions load_prediction_file(const std::filesystem::path& path, const TaxonomyGraph& graph);

// Throws unless `id` is usable as a model id (non-empty, no whitespace,
// no path separators, no commas).
void validate_model_id(std::string_view id);

struct Prediction {
  LabelId label;
  Confidence confidence;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Top-1 predictions of every model on every corpus image, stored column-wise
// (one label column and one confidence column per model).
class PredictionTable {
 public:
  // Fails unless every model covers exactly the same set of images.
  static PredictionTable assemble(std::vector<ModelPredictions> models);

  // Copy of this table with one more model appended to the competition order.
  PredictionTable with_model(ModelPredictions model) const;

  std::size_t model_count() const { return models_.size(); }
  std::size_t image_count() const { return images_.size(); }
  const std::vector<std::string>& models() const { return models_; }
  const std::vector<std::string>& images() const { return images_; }

  std::optional<ModelIndex> find_model(std::string_view model) const;
  ModelIndex model_index(std::string_view model) const;
  std::optional<ImageIndex> find_image(std::string_view image) const;

  Prediction prediction_of(std::string_view model, std::string_view image) const;
  Prediction at(ModelIndex model, ImageIndex image) const {
    return {LabelId{labels_[model][image]}, Confidence{confidences_[model][image]}};
  }

  std::span<const std::uint32_t> label_column(ModelIndex model) const { return labels_.at(model); }
  std::span<const std::uint32_t> confidence_column(ModelIndex model) const { return confidences_.at(model); }

  // Distinct labels predicted by any model, ascending.
  std::vector<LabelId> labels_used() const;

  friend bool operator==(const PredictionTable& a, const PredictionTable& b) {
    return a.models_ == b.models_ && a.images_ == b.images_ && a.labels_ == b.labels_ &&
           a.confidences_ == b.confidences_;
  }

 private:
  void append_model(ModelPredictions model);

  std::vector<std::string> models_;
  std::vector<std::string> images_;
  std::unordered_map<std::string, ImageIndex> image_index_;
  std::vector<std::vector<std::uint32_t>> labels_;
  std::vector<std::vector<std::uint32_t>> confidences_;
};

PredictionTable load_predictions(const TaxonomyGraph& graph, std::span<const std::filesystem::path> paths);

}  // namespace mad
