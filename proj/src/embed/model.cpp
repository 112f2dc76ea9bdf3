// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "fixv2w/embed.hpp"
#include "fixv2w/error.hpp"
#include "fixv2w/kernels.hpp"

namespace fixv2w::embed {

EmbeddingModel::EmbeddingModel(std::size_t dim, std::vector<kg::EntityId> entities, int norm_p)
    : dim_(dim), norm_p_(norm_p), ids_(std::move(entities)) {
  if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
  if (norm_p_ != 1 && norm_p_ != 2) throw ConfigError("norm_p must be 1 or 2");
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], static_cast<Row>(i));
  entities_.assign(ids_.size() * dim_, 0.0f);
  relations_.assign(relation_count() * dim_, 0.0f);
}

std::optional<Row> EmbeddingModel::row(const kg::EntityId& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Row EmbeddingModel::require_row(const kg::EntityId& id) const {
  if (auto r = row(id)) return *r;
  throw UnknownEntityError("entity " + id.key() + " is not embedded in the model");
}

float EmbeddingModel::score(Row head, kg::RelationKind r, Row tail) const {
  return -kernels::active().translation_norm(entity(head).data(), relation(r).data(), entity(tail).data(), dim_,
                                             norm_p_);
}

float EmbeddingModel::score(const kg::Triple& t) const {
  return score(require_row(t.head), t.relation, require_row(t.tail));
}

bool operator==(const EmbeddingModel& a, const EmbeddingModel& b) {
  return a.dim_ == b.dim_ && a.norm_p_ == b.norm_p_ && a.ids_ == b.ids_ && a.entities_ == b.entities_ &&
         a.relations_ == b.relations_;
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingModel& model, const kg::EntityId& anchor,
                                        std::span<const kg::EntityId> pool, std::size_t k) {
  const auto& kt = kernels::active();
  const auto a = model.entity(model.require_row(anchor));
  std::vector<Neighbor> out;
  out.reserve(pool.size());
  for (const auto& id : pool) {
    const auto v = model.entity(model.require_row(id));
    out.push_back({id, std::sqrt(kt.squared_distance(a.data(), v.data(), model.dim()))});
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& x, const Neighbor& y) {
    if (x.distance != y.distance) return x.distance < y.distance;
    return x.id < y.id;
  });
  out.erase(std::unique(out.begin(), out.end(), [](const Neighbor& x, const Neighbor& y) { return x.id == y.id; }),
            out.end());
  if (out.size() > k) out.erase(out.begin() + static_cast<std::ptrdiff_t>(k), out.end());
  return out;
}

}  // namespace fixv2w::embed
