// SPDX-License-Identifier: Apache-2.0
//
// Translational (TransE) embeddings: score(h, r, t) = -||h + r - t||_p,
// trained with a multiclass NLL over sampled tail corruptions, an Lq
// penalty and Adam.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fixv2w/kg.hpp"

namespace fixv2w::embed {

using Row = std::uint32_t;

class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  // Rows follow the sorted order of `entities`; vectors are zero.
  EmbeddingModel(std::size_t dim, std::vector<kg::EntityId> entities, int norm_p = 2);

  std::size_t dim() const { return dim_; }
  int norm_p() const { return norm_p_; }
  std::size_t entity_count() const { return ids_.size(); }
  static constexpr std::size_t relation_count() { return kg::kRelationCount; }

  std::span<const kg::EntityId> entity_ids() const { return ids_; }
  std::optional<Row> row(const kg::EntityId& id) const;
  Row require_row(const kg::EntityId& id) const;  // UnknownEntityError
  bool contains(const kg::EntityId& id) const { return row(id).has_value(); }

  std::span<float> entity(Row r) { return {entities_.data() + std::size_t{r} * dim_, dim_}; }
  std::span<const float> entity(Row r) const { return {entities_.data() + std::size_t{r} * dim_, dim_}; }
  std::span<float> relation(kg::RelationKind k) {
    return {relations_.data() + static_cast<std::size_t>(k) * dim_, dim_};
  }
  std::span<const float> relation(kg::RelationKind k) const {
    return {relations_.data() + static_cast<std::size_t>(k) * dim_, dim_};
  }

  std::vector<float>& entity_matrix() { return entities_; }
  const std::vector<float>& entity_matrix() const { return entities_; }
  std::vector<float>& relation_matrix() { return relations_; }
  const std::vector<float>& relation_matrix() const { return relations_; }

  // -||h + r - t||_p. Throws UnknownEntityError naming the missing id.
  float score(const kg::Triple& t) const;
  float score(Row head, kg::RelationKind r, Row tail) const;

  friend bool operator==(const EmbeddingModel&, const EmbeddingModel&);

 private:
  std::size_t dim_ = 0;
  int norm_p_ = 2;
  std::vector<kg::EntityId> ids_;
  std::unordered_map<kg::EntityId, Row, kg::EntityIdHash> index_;
  std::vector<float> entities_;
  std::vector<float> relations_;
};

struct Neighbor {
  kg::EntityId id;
  float distance = 0;  // L2
};

// The k pool members closest to `anchor` (L2), ascending; ties by id.
std::vector<Neighbor> nearest_neighbors(const EmbeddingModel& model, const kg::EntityId& anchor,
                                        std::span<const kg::EntityId> pool, std::size_t k);

// ---------------------------------------------------------------------------
// Loss

struct LossConfig {
  int norm_p = 2;
  double reg_weight = 1e-5;
  int reg_order = 3;
};

// One positive triple with its candidate tails (the true tail is implicit).
struct Sample {
  Row head = 0;
  std::uint8_t relation = 0;
  Row tail = 0;
  std::vector<Row> negatives;
};

template <class Real>
struct ParamView {
  std::size_t dim = 0;
  std::span<const Real> entities;
  std::span<const Real> relations;
};

// Gradient rows for the parameters a batch touched.
template <class Real>
class SparseGradient {
 public:
  SparseGradient(std::size_t entities, std::size_t relations, std::size_t dim);

  Real* entity_row(Row e);
  Real* relation_row(std::size_t r);
  std::span<const Row> entity_rows() const { return entity_rows_; }
  std::span<const std::uint32_t> relation_rows() const { return relation_rows_; }
  const Real* entity_grad(Row e) const;  // nullptr when untouched
  const Real* relation_grad(std::size_t r) const;
  void add(const SparseGradient& other);
  void clear();
  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_;
  std::vector<std::int32_t> entity_slot_, relation_slot_;
  std::vector<Row> entity_rows_;
  std::vector<std::uint32_t> relation_rows_;
  std::vector<Real> entity_values_, relation_values_;
};

// Mean over the batch of -log softmax(true tail | {true tail} + negatives),
// plus reg_weight * sum |x|^reg_order over every distinct row the batch
// touches. Gradients are accumulated into `grad` when given.
template <class Real>
Real loss_and_gradient(const ParamView<Real>& params, std::span<const Sample> batch, const LossConfig& config,
                       SparseGradient<Real>* grad);

// ---------------------------------------------------------------------------
// Training

struct TrainingConfig {
  std::size_t dim = 100;
  std::size_t epochs = 300;
  std::size_t batch_size = 512;
  double learning_rate = 1e-3;
  std::size_t negatives = 50;
  double reg_weight = 1e-5;
  int reg_order = 3;
  int norm_p = 2;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool normalize_entities = true;
  // Draw corrupted tails from the true tail's namespace.
  bool negatives_same_namespace = true;
  // Resample corruptions that happen to be known true triples.
  bool filter_known = true;

  void validate() const;  // ConfigError
};

struct TrainingResult {
  EmbeddingModel model;
  std::vector<double> epoch_loss;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// Requires a frozen graph with at least one triple. Deterministic for a
// fixed (graph content, config); independent of triple insertion order.
TrainingResult train(const kg::KnowledgeGraph& graph, const TrainingConfig& config,
                     const EpochCallback& on_epoch = {});

// Xavier-uniform rows seeded per id, entities scaled to unit L2.
EmbeddingModel initial_model(std::span<const kg::EntityId> entities, const TrainingConfig& config);

// ---------------------------------------------------------------------------
// Model files: "FXV2W1", u32 dim, u64 entities, u64 relations, id table
// (u32 length + UTF-8 each), row-major f32 entity then relation matrices,
// u8 norm_p. Little-endian.

void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_model(const std::filesystem::path& path);
std::string serialize_model(const EmbeddingModel& model);
EmbeddingModel deserialize_model(std::string_view bytes);

}  // namespace fixv2w::embed
