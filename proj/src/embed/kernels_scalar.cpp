// SPDX-License-Identifier: Apache-2.0
#include "fixv2w/kernels.hpp"
#include "kernels_ref.hpp"

namespace fixv2w::embed::kernels {

const Table& scalar() {
  static const Table table{
      &ref::translation_norm<float>,
      &ref::translation_residual<float>,
      &ref::norm_direction<float>,
      &ref::squared_distance<float>,
      &ref::squared_norm<float>,
      &ref::sum_abs_pow<float>,
      &ref::add_abs_pow_grad<float>,
      &ref::axpy<float>,
      &ref::scale<float>,
      &ref::adam_update<float>,
  };
  return table;
}

}  // namespace fixv2w::embed::kernels
