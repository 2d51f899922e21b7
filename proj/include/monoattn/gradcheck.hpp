#pragma once

#include <functional>
#include <string>
#include <vector>

#include "monoattn/tensor.hpp"

namespace monoattn {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

// Central finite-difference check of d(f)/d(params). f must be a
// deterministic scalar-valued forward pass closed over `params`; it is run
// once on a tape for analytic gradients and twice per parameter element for
// the numeric estimate. Returns the worst relative error with the
// |a-b| / max(|a|, |b|, 1e-8) convention.
struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
};

GradCheckReport grad_check_report(const std::function<Tensor()>& f,
                                  std::vector<NamedParam>& params, double eps = 1e-5);

double grad_check(const std::function<Tensor()>& f, std::vector<NamedParam>& params,
                  double eps = 1e-5);

}  // namespace monoattn
