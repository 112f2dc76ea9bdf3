// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fixv2w/embed.hpp"

namespace fixv2w::embed::detail {

// Sum over `samples` of the per-sample NLL; gradients are scaled by `scale`.
template <class Real>
Real nll_accumulate(const ParamView<Real>& params, std::span<const Sample> samples, int norm_p, Real scale,
                    SparseGradient<Real>* grad);

// Lq penalty over the rows present in `rows`, added into the same rows.
template <class Real>
Real regularize(const ParamView<Real>& params, SparseGradient<Real>& rows, const LossConfig& config);

// Penalty over an explicit row list (no gradient).
template <class Real>
Real penalty(const ParamView<Real>& params, std::span<const Row> entity_rows, std::span<const std::uint32_t> relation_rows,
             const LossConfig& config);

}  // namespace fixv2w::embed::detail
