#include "monoattn/gradcheck.hpp"

#include <cmath>
#include <cstring>

namespace monoattn {

GradCheckReport grad_check_report(const std::function<Tensor()>& f,
                                  std::vector<NamedParam>& params, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3))
    throw DomainError("grad_check: eps " + std::to_string(eps) + " outside [1e-7, 1e-3]");

  for (auto& p : params) {
    p.tensor.set_requires_grad(true);
    p.tensor.zero_grad();
  }

  double loss0;
  {
    GraphTape tape;
    Tensor loss = f();
    loss0 = loss.value();
    tape.backward(loss);
  }
  {
    Tensor again = f();  // no tape: pure forward
    if (std::memcmp(&loss0, &again.data()[0], sizeof(double)) != 0)
      throw DeterminismError("grad_check: forward pass is not deterministic (" +
                             std::to_string(loss0) + " vs " + std::to_string(again.value()) + ")");
  }

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) analytic.push_back(p.tensor.grad());

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& t = params[pi].tensor;
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double saved = t.data()[i];
      t.data()[i] = saved + eps;
      const double up = f().value();
      t.data()[i] = saved - eps;
      const double down = f().value();
      t.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double rel = std::fabs(a - numeric) /
                         std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = params[pi].name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

double grad_check(const std::function<Tensor()>& f, std::vector<NamedParam>& params,
                  double eps) {
  return grad_check_report(f, params, eps).max_rel_err;
}

}  // namespace monoattn
