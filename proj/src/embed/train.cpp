// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>
#include <unordered_set>

#include "fixv2w/error.hpp"
#include "fixv2w/kernels.hpp"
#include "loss_impl.hpp"

namespace fixv2w::embed {
namespace {

constexpr float kBeta1 = 0.9f;
constexpr float kBeta2 = 0.999f;
constexpr float kEpsilon = 1e-8f;
constexpr int kResampleTries = 10;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

void fill_xavier(std::span<float> row, std::uint64_t seed, float bound) {
  std::mt19937_64 gen(splitmix64(seed));
  std::uniform_real_distribution<float> dist(-bound, bound);
  for (auto& x : row) x = dist(gen);
}

void unit_normalize(std::span<float> row) {
  const float n2 = kernels::active().squared_norm(row.data(), row.size());
  if (n2 > 0) kernels::active().scale(row.data(), 1.0f / std::sqrt(n2), row.size());
}

struct PackedTriple {
  Row head;
  std::uint8_t relation;
  Row tail;
  auto operator<=>(const PackedTriple&) const = default;
};

class Trainer {
 public:
  Trainer(const kg::KnowledgeGraph& graph, const TrainingConfig& cfg)
      : cfg_(cfg), model_(initial_model(graph.entities(), cfg)) {
    const auto entity_count = model_.entity_count();
    std::vector<Row> row_of(graph.entity_count());
    for (kg::EntityIndex i = 0; i < graph.entity_count(); ++i) row_of[i] = model_.require_row(graph.entity(i));
    for (const auto& t : graph.triple_refs()) {
      triples_.push_back({row_of[t.head], static_cast<std::uint8_t>(t.relation), row_of[t.tail]});
    }
    std::sort(triples_.begin(), triples_.end());
    for (const auto& t : triples_) known_.insert(key(t.head, t.relation, t.tail));

    // Rows are sorted by id, so each namespace is one contiguous range.
    const auto ids = model_.entity_ids();
    ns_begin_.fill(entity_count);
    ns_end_.fill(0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto ns = static_cast<std::size_t>(ids[i].ns());
      ns_begin_[ns] = std::min<std::size_t>(ns_begin_[ns], i);
      ns_end_[ns] = std::max<std::size_t>(ns_end_[ns], i + 1);
    }
    ent_m_.assign(model_.entity_matrix().size(), 0.0f);
    ent_v_.assign(model_.entity_matrix().size(), 0.0f);
    rel_m_.assign(model_.relation_matrix().size(), 0.0f);
    rel_v_.assign(model_.relation_matrix().size(), 0.0f);

    const auto threads = std::max<std::size_t>(1, cfg_.threads);
    for (std::size_t i = 0; i < threads; ++i) {
      grads_.emplace_back(entity_count, EmbeddingModel::relation_count(), cfg_.dim);
    }
    loss_cfg_ = {cfg_.norm_p, cfg_.reg_weight, cfg_.reg_order};
  }

  TrainingResult run(const EpochCallback& on_epoch) {
    TrainingResult result;
    std::vector<std::size_t> order(triples_.size());
    for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::mt19937_64 shuffle_rng(splitmix64(cfg_.seed ^ splitmix64(epoch + 1)));
      std::shuffle(order.begin(), order.end(), shuffle_rng);

      double epoch_loss = 0;
      for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
        const double batch_loss = step(std::span(order).subspan(start, end - start), epoch * order.size() + start);
        if (!std::isfinite(batch_loss)) {
          throw DivergenceError("training diverged at epoch " + std::to_string(epoch + 1) + ", batch starting at " +
                                std::to_string(start) + " (loss " + std::to_string(batch_loss) +
                                "); lower the learning rate");
        }
        epoch_loss += batch_loss * static_cast<double>(end - start);
      }
      epoch_loss /= static_cast<double>(order.size());
      result.epoch_loss.push_back(epoch_loss);
      if (on_epoch) on_epoch(epoch, epoch_loss);
    }
    result.model = std::move(model_);
    return result;
  }

 private:
  std::uint64_t key(Row h, std::uint8_t r, Row t) const {
    return (std::uint64_t{h} * EmbeddingModel::relation_count() + r) * model_.entity_count() + t;
  }

  Sample make_sample(const PackedTriple& t, std::uint64_t position) const {
    Sample s{t.head, t.relation, t.tail, {}};
    std::size_t lo = 0, hi = model_.entity_count();
    if (cfg_.negatives_same_namespace) {
      const auto ns = static_cast<std::size_t>(model_.entity_ids()[t.tail].ns());
      lo = ns_begin_[ns];
      hi = ns_end_[ns];
    }
    std::minstd_rand rng(static_cast<std::uint32_t>(splitmix64(cfg_.seed * 0x2545F4914F6CDD1Dull + position) %
                                                    2147483646u) + 1u);
    std::uniform_int_distribution<std::size_t> pick(lo, hi - 1);
    s.negatives.reserve(cfg_.negatives);
    for (std::size_t i = 0; i < cfg_.negatives; ++i) {
      Row cand = static_cast<Row>(pick(rng));
      for (int tries = 0; cfg_.filter_known && tries < kResampleTries && known_.contains(key(t.head, t.relation, cand));
           ++tries) {
        cand = static_cast<Row>(pick(rng));
      }
      s.negatives.push_back(cand);
    }
    return s;
  }

  double step(std::span<const std::size_t> batch, std::uint64_t position) {
    const std::size_t n = batch.size();
    const std::size_t chunks = std::min(grads_.size(), n);
    const float scale = 1.0f / static_cast<float>(n);
    const ParamView<float> params{cfg_.dim, model_.entity_matrix(), model_.relation_matrix()};
    std::vector<double> chunk_loss(chunks, 0.0);

    auto work = [&](std::size_t c) {
      const std::size_t from = c * n / chunks, to = (c + 1) * n / chunks;
      std::vector<Sample> samples;
      samples.reserve(to - from);
      for (std::size_t i = from; i < to; ++i) samples.push_back(make_sample(triples_[batch[i]], position + i));
      grads_[c].clear();
      chunk_loss[c] = detail::nll_accumulate<float>(params, samples, cfg_.norm_p, scale, &grads_[c]);
    };
    if (chunks == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t c = 0; c < chunks; ++c) pool.emplace_back(work, c);
      for (auto& t : pool) t.join();
    }
    auto& grad = grads_[0];
    for (std::size_t c = 1; c < chunks; ++c) grad.add(grads_[c]);
    double loss = 0;
    for (auto l : chunk_loss) loss += l;
    loss = loss / static_cast<double>(n) + detail::regularize<float>(params, grad, loss_cfg_);
    apply(grad);
    return loss;
  }

  void apply(const SparseGradient<float>& grad) {
    ++t_;
    const auto& kt = kernels::active();
    const float bc1 = 1.0f - static_cast<float>(std::pow(double{kBeta1}, static_cast<double>(t_)));
    const float bc2 = 1.0f - static_cast<float>(std::pow(double{kBeta2}, static_cast<double>(t_)));
    const auto lr = static_cast<float>(cfg_.learning_rate);
    const std::size_t k = cfg_.dim;
    for (auto e : grad.entity_rows()) {
      const std::size_t off = std::size_t{e} * k;
      kt.adam_update(model_.entity_matrix().data() + off, ent_m_.data() + off, ent_v_.data() + off,
                     grad.entity_grad(e), k, lr, kBeta1, kBeta2, kEpsilon, bc1, bc2);
      if (cfg_.normalize_entities) unit_normalize(model_.entity(e));
    }
    for (auto r : grad.relation_rows()) {
      const std::size_t off = std::size_t{r} * k;
      kt.adam_update(model_.relation_matrix().data() + off, rel_m_.data() + off, rel_v_.data() + off,
                     grad.relation_grad(r), k, lr, kBeta1, kBeta2, kEpsilon, bc1, bc2);
    }
  }

  const TrainingConfig& cfg_;
  EmbeddingModel model_;
  LossConfig loss_cfg_;
  std::vector<PackedTriple> triples_;
  std::unordered_set<std::uint64_t> known_;
  std::array<std::size_t, 3> ns_begin_{}, ns_end_{};
  std::vector<float> ent_m_, ent_v_, rel_m_, rel_v_;
  std::vector<SparseGradient<float>> grads_;
  std::uint64_t t_ = 0;
};

}  // namespace

void TrainingConfig::validate() const {
  auto positive = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("training config: ") + what);
  };
  positive(dim > 0, "dim must be positive");
  positive(epochs > 0, "epochs must be positive");
  positive(batch_size > 0, "batch_size must be positive");
  positive(learning_rate > 0 && std::isfinite(learning_rate), "learning_rate must be positive");
  positive(negatives > 0, "negatives must be positive");
  positive(reg_weight >= 0 && std::isfinite(reg_weight), "reg_weight must be non-negative");
  positive(reg_order >= 1 && reg_order <= 3, "reg_order must be 1, 2 or 3");
  positive(norm_p == 1 || norm_p == 2, "norm_p must be 1 or 2");
  positive(threads > 0, "threads must be positive");
}

EmbeddingModel initial_model(std::span<const kg::EntityId> entities, const TrainingConfig& cfg) {
  cfg.validate();
  EmbeddingModel model(cfg.dim, std::vector<kg::EntityId>(entities.begin(), entities.end()), cfg.norm_p);
  const auto k = static_cast<double>(cfg.dim);
  const auto ent_bound = static_cast<float>(std::sqrt(6.0 / (static_cast<double>(model.entity_count()) + k)));
  const auto rel_bound = static_cast<float>(std::sqrt(6.0 / (static_cast<double>(model.relation_count()) + k)));
  const auto ids = model.entity_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto seed = fnv1a(std::string(kg::to_string(ids[i].ns())) + ":" + ids[i].key()) ^ cfg.seed;
    fill_xavier(model.entity(static_cast<Row>(i)), seed, ent_bound);
    if (cfg.normalize_entities) unit_normalize(model.entity(static_cast<Row>(i)));
  }
  for (auto r : kg::kAllRelations) {
    fill_xavier(model.relation(r), fnv1a("relation:" + std::string(kg::to_string(r))) ^ cfg.seed, rel_bound);
  }
  return model;
}

TrainingResult train(const kg::KnowledgeGraph& graph, const TrainingConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (!graph.frozen()) throw ValidationError("the graph must be frozen before training");
  if (graph.triple_count() == 0) throw EmptyInputError("cannot train on a graph without triples");
  Trainer trainer(graph, config);
  return trainer.run(on_epoch);
}

}  // namespace fixv2w::embed
