// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "fixv2w/error.hpp"
#include "fixv2w/kernels.hpp"
#include "kernels_ref.hpp"
#include "loss_impl.hpp"

namespace fixv2w::embed {
namespace {

// float goes through the dispatched kernels, double through the reference.
template <class Real>
struct Ops {
  static Real norm(const Real* h, const Real* r, const Real* t, std::size_t n, int p) {
    return ref::translation_norm(h, r, t, n, p);
  }
  static void residual(const Real* h, const Real* r, const Real* t, Real* out, std::size_t n) {
    ref::translation_residual(h, r, t, out, n);
  }
  static void direction(const Real* d, Real* out, std::size_t n, int p, Real norm) {
    ref::norm_direction(d, out, n, p, norm);
  }
  static void axpy(Real a, const Real* x, Real* y, std::size_t n) { ref::axpy(a, x, y, n); }
  static Real pow_sum(const Real* x, std::size_t n, int q) { return ref::sum_abs_pow(x, n, q); }
  static void pow_grad(const Real* x, Real* g, std::size_t n, int q, Real c) { ref::add_abs_pow_grad(x, g, n, q, c); }
};

template <>
struct Ops<float> {
  static float norm(const float* h, const float* r, const float* t, std::size_t n, int p) {
    return kernels::active().translation_norm(h, r, t, n, p);
  }
  static void residual(const float* h, const float* r, const float* t, float* out, std::size_t n) {
    kernels::active().translation_residual(h, r, t, out, n);
  }
  static void direction(const float* d, float* out, std::size_t n, int p, float norm) {
    kernels::active().norm_direction(d, out, n, p, norm);
  }
  static void axpy(float a, const float* x, float* y, std::size_t n) { kernels::active().axpy(a, x, y, n); }
  static float pow_sum(const float* x, std::size_t n, int q) { return kernels::active().sum_abs_pow(x, n, q); }
  static void pow_grad(const float* x, float* g, std::size_t n, int q, float c) {
    kernels::active().add_abs_pow_grad(x, g, n, q, c);
  }
};

template <class Real>
const Real* entity_ptr(const ParamView<Real>& p, Row r) {
  return p.entities.data() + std::size_t{r} * p.dim;
}

template <class Real>
const Real* relation_ptr(const ParamView<Real>& p, std::size_t r) {
  return p.relations.data() + r * p.dim;
}

template <class Real>
void check_sample(const ParamView<Real>& p, const Sample& s) {
  const auto entities = p.entities.size() / p.dim;
  const auto relations = p.relations.size() / p.dim;
  bool ok = s.head < entities && s.tail < entities && s.relation < relations;
  for (auto n : s.negatives) ok = ok && n < entities;
  if (!ok) throw InternalError("sample references a row outside the parameter matrices");
}

}  // namespace

template <class Real>
SparseGradient<Real>::SparseGradient(std::size_t entities, std::size_t relations, std::size_t dim)
    : dim_(dim), entity_slot_(entities, -1), relation_slot_(relations, -1) {}

template <class Real>
Real* SparseGradient<Real>::entity_row(Row e) {
  auto& slot = entity_slot_.at(e);
  if (slot < 0) {
    slot = static_cast<std::int32_t>(entity_rows_.size());
    entity_rows_.push_back(e);
    entity_values_.resize(entity_values_.size() + dim_, Real(0));
  }
  return entity_values_.data() + static_cast<std::size_t>(slot) * dim_;
}

template <class Real>
Real* SparseGradient<Real>::relation_row(std::size_t r) {
  auto& slot = relation_slot_.at(r);
  if (slot < 0) {
    slot = static_cast<std::int32_t>(relation_rows_.size());
    relation_rows_.push_back(static_cast<std::uint32_t>(r));
    relation_values_.resize(relation_values_.size() + dim_, Real(0));
  }
  return relation_values_.data() + static_cast<std::size_t>(slot) * dim_;
}

template <class Real>
const Real* SparseGradient<Real>::entity_grad(Row e) const {
  const auto slot = entity_slot_.at(e);
  return slot < 0 ? nullptr : entity_values_.data() + static_cast<std::size_t>(slot) * dim_;
}

template <class Real>
const Real* SparseGradient<Real>::relation_grad(std::size_t r) const {
  const auto slot = relation_slot_.at(r);
  return slot < 0 ? nullptr : relation_values_.data() + static_cast<std::size_t>(slot) * dim_;
}

template <class Real>
void SparseGradient<Real>::add(const SparseGradient& other) {
  for (auto e : other.entity_rows_) Ops<Real>::axpy(Real(1), other.entity_grad(e), entity_row(e), dim_);
  for (auto r : other.relation_rows_) Ops<Real>::axpy(Real(1), other.relation_grad(r), relation_row(r), dim_);
}

template <class Real>
void SparseGradient<Real>::clear() {
  for (auto e : entity_rows_) entity_slot_[e] = -1;
  for (auto r : relation_rows_) relation_slot_[r] = -1;
  entity_rows_.clear();
  relation_rows_.clear();
  entity_values_.clear();
  relation_values_.clear();
}

namespace detail {

template <class Real>
Real nll_accumulate(const ParamView<Real>& params, std::span<const Sample> samples, int norm_p, Real scale,
                    SparseGradient<Real>* grad) {
  const std::size_t k = params.dim;
  std::vector<Real> dist, d(k), u(k);
  Real total = 0;
  for (const auto& s : samples) {
    check_sample(params, s);
    const Real* h = entity_ptr(params, s.head);
    const Real* r = relation_ptr(params, s.relation);
    const std::size_t n = s.negatives.size() + 1;
    auto tail_of = [&](std::size_t j) { return j == 0 ? s.tail : s.negatives[j - 1]; };

    dist.resize(n);
    Real best = -std::numeric_limits<Real>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      dist[j] = Ops<Real>::norm(h, r, entity_ptr(params, tail_of(j)), k, norm_p);
      best = std::max(best, -dist[j]);
    }
    Real z = 0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(-dist[j] - best);
    const Real log_z = std::log(z);
    total += -((-dist[0]) - best - log_z);

    if (!grad) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const Real p = std::exp(-dist[j] - best - log_z);
      const Real coef = (p - (j == 0 ? Real(1) : Real(0))) * scale;
      if (coef == 0) continue;
      const Row t = tail_of(j);
      Ops<Real>::residual(h, r, entity_ptr(params, t), d.data(), k);
      Ops<Real>::direction(d.data(), u.data(), k, norm_p, dist[j]);
      // score = -dist; dL/d(dist) = -coef.
      Ops<Real>::axpy(-coef, u.data(), grad->entity_row(s.head), k);
      Ops<Real>::axpy(-coef, u.data(), grad->relation_row(s.relation), k);
      Ops<Real>::axpy(coef, u.data(), grad->entity_row(t), k);
    }
    // Rows that got no gradient are still touched by the batch.
    grad->entity_row(s.head);
    grad->relation_row(s.relation);
    for (std::size_t j = 0; j < n; ++j) grad->entity_row(tail_of(j));
  }
  return total;
}

template <class Real>
Real regularize(const ParamView<Real>& params, SparseGradient<Real>& rows, const LossConfig& config) {
  if (config.reg_weight == 0) return 0;
  const auto lambda = static_cast<Real>(config.reg_weight);
  const std::size_t k = params.dim;
  Real total = 0;
  const std::vector<Row> entity_rows(rows.entity_rows().begin(), rows.entity_rows().end());
  const std::vector<std::uint32_t> relation_rows(rows.relation_rows().begin(), rows.relation_rows().end());
  for (auto e : entity_rows) {
    const Real* x = entity_ptr(params, e);
    total += Ops<Real>::pow_sum(x, k, config.reg_order);
    Ops<Real>::pow_grad(x, rows.entity_row(e), k, config.reg_order, lambda);
  }
  for (auto r : relation_rows) {
    const Real* x = relation_ptr(params, r);
    total += Ops<Real>::pow_sum(x, k, config.reg_order);
    Ops<Real>::pow_grad(x, rows.relation_row(r), k, config.reg_order, lambda);
  }
  return lambda * total;
}

template <class Real>
Real penalty(const ParamView<Real>& params, std::span<const Row> entity_rows, std::span<const std::uint32_t> relation_rows,
             const LossConfig& config) {
  if (config.reg_weight == 0) return 0;
  Real total = 0;
  for (auto e : entity_rows) total += Ops<Real>::pow_sum(entity_ptr(params, e), params.dim, config.reg_order);
  for (auto r : relation_rows) total += Ops<Real>::pow_sum(relation_ptr(params, r), params.dim, config.reg_order);
  return static_cast<Real>(config.reg_weight) * total;
}

}  // namespace detail

template <class Real>
Real loss_and_gradient(const ParamView<Real>& params, std::span<const Sample> batch, const LossConfig& config,
                       SparseGradient<Real>* grad) {
  if (batch.empty()) return 0;
  if (params.dim == 0) throw ConfigError("embedding dimension must be positive");
  const Real scale = Real(1) / static_cast<Real>(batch.size());
  if (grad) {
    // Penalise only rows this batch touched, so collect them separately.
    SparseGradient<Real> local(params.entities.size() / params.dim, params.relations.size() / params.dim,
                               params.dim);
    const Real nll = detail::nll_accumulate(params, batch, config.norm_p, scale, &local);
    const Real reg = detail::regularize(params, local, config);
    grad->add(local);
    return nll * scale + reg;
  }
  std::vector<Row> entity_rows;
  std::vector<std::uint32_t> relation_rows;
  for (const auto& s : batch) {
    entity_rows.push_back(s.head);
    entity_rows.push_back(s.tail);
    entity_rows.insert(entity_rows.end(), s.negatives.begin(), s.negatives.end());
    relation_rows.push_back(s.relation);
  }
  std::sort(entity_rows.begin(), entity_rows.end());
  entity_rows.erase(std::unique(entity_rows.begin(), entity_rows.end()), entity_rows.end());
  std::sort(relation_rows.begin(), relation_rows.end());
  relation_rows.erase(std::unique(relation_rows.begin(), relation_rows.end()), relation_rows.end());
  const Real nll = detail::nll_accumulate<Real>(params, batch, config.norm_p, scale, nullptr);
  return nll * scale + detail::penalty(params, entity_rows, relation_rows, config);
}

template class SparseGradient<float>;
template class SparseGradient<double>;
template float loss_and_gradient<float>(const ParamView<float>&, std::span<const Sample>, const LossConfig&,
                                        SparseGradient<float>*);
template double loss_and_gradient<double>(const ParamView<double>&, std::span<const Sample>, const LossConfig&,
                                          SparseGradient<double>*);

namespace detail {
template float nll_accumulate<float>(const ParamView<float>&, std::span<const Sample>, int, float,
                                     SparseGradient<float>*);
template float regularize<float>(const ParamView<float>&, SparseGradient<float>&, const LossConfig&);
}  // namespace detail

}  // namespace fixv2w::embed
