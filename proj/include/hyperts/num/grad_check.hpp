#pragma once

#include <functional>

#include "hyperts/num/graph.hpp"

namespace hyperts::num {

/// A scalar-valued tensor function built on a Graph.
using ScalarFn = std::function<Tensor(Graph&, const Tensor&)>;

/// Compare reverse-mode gradients of f at x against central finite
/// differences. Returns the maximum relative error
///   max_i |analytic_i - numeric_i| / max(1, |analytic_i|, |numeric_i|).
/// f must be deterministic in x (re-evaluated 2*numel times).
double grad_check(const ScalarFn& f, const Tensor& x, double eps = 1e-5);

} // namespace hyperts::num
