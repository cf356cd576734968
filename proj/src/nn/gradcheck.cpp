#include "esp/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace esp::nn {

GradCheckReport check_gradients(ParameterSet& params, const std::function<Var(Tape&)>& build, double h,
                                double floor, bool training) {
  params.zero_grad();
  std::uint64_t base_sig;
  {
    Tape tape(training);
    Var loss = build(tape);
    tape.backward(loss);
    base_sig = tape.branch_signature();
  }
  auto eval = [&](std::uint64_t& sig) {
    Tape tape(training);
    Var loss = build(tape);
    sig = tape.branch_signature();
    return tape.scalar(loss);
  };

  GradCheckReport report;
  for (std::size_t k = 0; k < params.count(); ++k) {
    Parameter& p = params.at(k);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p.value[i];
      std::uint64_t sp, sm;
      p.value[i] = saved + h;
      const double fp = eval(sp);
      p.value[i] = saved - h;
      const double fm = eval(sm);
      p.value[i] = saved;
      if (sp != base_sig || sm != base_sig) {
        ++report.skipped;
        continue;
      }
      const double numeric = (fp - fm) / (2.0 * h);
      const double analytic = p.grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      const double err = std::abs(analytic - numeric) / denom;
      ++report.checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst = p.name() + "[" + std::to_string(i) + "] analytic=" + std::to_string(analytic) +
                       " numeric=" + std::to_string(numeric);
      }
    }
  }
  return report;
}

}  // namespace esp::nn
