#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "uavsched/autodiff.hpp"

namespace uavsched {

// Builds a scalar loss on the given tape. Must be deterministic.
using LossFn = std::function<Var(Tape&)>;

struct GradcheckOptions {
  double eps = 1e-5;
  // 0 checks every entry; otherwise a seeded sample of entries per tensor.
  std::size_t max_entries_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares reverse-mode adjoints with central differences. Relative error
/// of one entry is |a - n| / max(|a|, |n|, 1e-8). Throws NumericError on
/// non-finite losses or gradients.
GradcheckResult gradcheck_detailed(const LossFn& f, const std::vector<Parameter*>& params,
                                   const GradcheckOptions& options = {});

double gradcheck(const LossFn& f, const std::vector<Parameter*>& params, double eps = 1e-5);

}  // namespace uavsched
