#include "hyperts/num/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace hyperts::num {

double grad_check(const ScalarFn& f, const Tensor& x, double eps) {
    Tensor probe = Tensor::from_data(x.shape(), x.data(), true);
    Graph g;
    Tensor y = f(g, probe);
    if (y.numel() != 1) throw DimensionError("grad_check: f must be scalar-valued");
    g.backward(y);
    std::vector<double> analytic =
        probe.requires_grad() ? probe.grad() : std::vector<double>(probe.numel(), 0.0);

    double worst = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        auto eval_at = [&](double v) {
            Tensor xi = Tensor::from_data(x.shape(), x.data(), false);
            xi.data()[i] = v;
            Graph ge(false);
            return f(ge, xi).value();
        };
        const double plus = eval_at(x.data()[i] + eps);
        const double minus = eval_at(x.data()[i] - eps);
        const double numeric = (plus - minus) / (2.0 * eps);
        const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

} // namespace hyperts::num
