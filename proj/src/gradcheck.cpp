#include "uavsched/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uavsched/rng.hpp"

namespace uavsched {

namespace {

double eval_loss(const LossFn& f) {
  Tape tape(false);
  const double v = f(tape).value().item();
  if (!std::isfinite(v)) throw NumericError("gradcheck: non-finite loss");
  return v;
}

}  // namespace

GradcheckResult gradcheck_detailed(const LossFn& f, const std::vector<Parameter*>& params,
                                   const GradcheckOptions& options) {
  if (!(options.eps > 0.0)) throw ArgumentError("gradcheck: eps must be > 0");
  Grad grad;
  {
    Tape tape(true);
    Var loss = f(tape);
    if (!std::isfinite(loss.value().item())) throw NumericError("gradcheck: non-finite loss");
    grad = tape.backward(loss);
  }
  if (!grad.all_finite()) throw NumericError("gradcheck: non-finite gradient");

  Rng rng(options.seed);
  GradcheckResult result;
  for (Parameter* p : params) {
    std::vector<std::size_t> entries(p->value.size());
    std::iota(entries.begin(), entries.end(), std::size_t{0});
    if (options.max_entries_per_param > 0 && entries.size() > options.max_entries_per_param) {
      rng.shuffle(std::span<std::size_t>(entries));
      entries.resize(options.max_entries_per_param);
      std::sort(entries.begin(), entries.end());
    }
    const Tensor* g = grad.find(*p);
    for (std::size_t i : entries) {
      const double saved = p->value[i];
      p->value[i] = saved + options.eps;
      const double up = eval_loss(f);
      p->value[i] = saved - options.eps;
      const double down = eval_loss(f);
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double analytic = g ? (*g)[i] : 0.0;
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.checked;
      if (rel > result.max_rel_error || result.checked == 1) {
        result.max_rel_error = std::max(result.max_rel_error, rel);
        if (rel >= result.max_rel_error) {
          result.worst_param = p->name;
          result.worst_index = i;
          result.worst_analytic = analytic;
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

double gradcheck(const LossFn& f, const std::vector<Parameter*>& params, double eps) {
  GradcheckOptions opt;
  opt.eps = eps;
  return gradcheck_detailed(f, params, opt).max_rel_error;
}

}  // namespace uavsched
