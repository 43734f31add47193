#include "hyperts/num/graph.hpp"

#include <algorithm>
#include <cmath>

namespace hyperts::num {

namespace {

void check_finite(const Tensor& t, const char* op) {
    for (double v : t.data()) {
        if (!std::isfinite(v))
            throw NumericError(std::string(op) + " produced a non-finite value");
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
}

// C (MxN) += op(A) * op(B). Physical layouts: A is MxK (or KxM when
// trans_a), B is KxN (or NxK when trans_b).
void dense_mm(double* c, const double* a, const double* b, int m, int k, int n,
              bool trans_a, bool trans_b) {
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int l = 0; l < k; ++l) {
            const double av = trans_a ? a[static_cast<std::size_t>(l) * m + i]
                                      : a[static_cast<std::size_t>(i) * k + l];
            if (av == 0.0) continue;
            if (!trans_b) {
                const double* brow = b + static_cast<std::size_t>(l) * n;
                for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
            } else {
                for (int j = 0; j < n; ++j) crow[j] += av * b[static_cast<std::size_t>(j) * k + l];
            }
        }
    }
}

} // namespace

bool Graph::track(const Tensor& a) const { return recording_ && a.requires_grad(); }

bool Graph::track(const Tensor& a, const Tensor& b) const {
    return recording_ && (a.requires_grad() || b.requires_grad());
}

Tensor Graph::make_like(Shape shape, bool tracked) const {
    return Tensor::zeros(std::move(shape), tracked);
}

void Graph::record(std::function<void()> fn) { tape_.push_back(std::move(fn)); }

void Graph::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw DimensionError("backward: loss must be a defined scalar");
    if (backward_done_)
        throw StateError("backward already ran on this graph; call reset() first");
    backward_done_ = true;
    if (!loss.requires_grad()) return; // constant loss: all gradients stay zero
    Tensor seed = loss;
    seed.grad()[0] += 1.0;
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
}

void Graph::reset() {
    tape_.clear();
    backward_done_ = false;
}

Tensor Graph::add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    const bool tracked = track(a, b);
    Tensor out = make_like(a.shape(), tracked);
    const std::size_t n = a.numel();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
    check_finite(out, "add");
    if (tracked) {
        record([a, b, out]() mutable {
            const auto& g = out.grad();
            if (a.requires_grad()) {
                double* ag = a.grad().data();
                for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i];
            }
            if (b.requires_grad()) {
                double* bg = b.grad().data();
                for (std::size_t i = 0; i < g.size(); ++i) bg[i] += g[i];
            }
        });
    }
    return out;
}

Tensor Graph::sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    const bool tracked = track(a, b);
    Tensor out = make_like(a.shape(), tracked);
    const std::size_t n = a.numel();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] - b.data()[i];
    check_finite(out, "sub");
    if (tracked) {
        record([a, b, out]() mutable {
            const auto& g = out.grad();
            if (a.requires_grad()) {
                double* ag = a.grad().data();
                for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i];
            }
            if (b.requires_grad()) {
                double* bg = b.grad().data();
                for (std::size_t i = 0; i < g.size(); ++i) bg[i] -= g[i];
            }
        });
    }
    return out;
}

Tensor Graph::mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    const bool tracked = track(a, b);
    Tensor out = make_like(a.shape(), tracked);
    const std::size_t n = a.numel();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
    check_finite(out, "mul");
    if (tracked) {
        record([a, b, out]() mutable {
            const auto& g = out.grad();
            if (a.requires_grad()) {
                double* ag = a.grad().data();
                const double* bd = b.data().data();
                for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i] * bd[i];
            }
            if (b.requires_grad()) {
                double* bg = b.grad().data();
                const double* ad = a.data().data();
                for (std::size_t i = 0; i < g.size(); ++i) bg[i] += g[i] * ad[i];
            }
        });
    }
    return out;
}

Tensor Graph::add_scalar(const Tensor& a, double c) {
    const bool tracked = track(a);
    Tensor out = make_like(a.shape(), tracked);
    for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] + c;
    check_finite(out, "add_scalar");
    if (tracked) {
        record([a, out]() mutable {
            const auto& g = out.grad();
            double* ag = a.grad().data();
            for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i];
        });
    }
    return out;
}

Tensor Graph::scale(const Tensor& a, double c) {
    const bool tracked = track(a);
    Tensor out = make_like(a.shape(), tracked);
    for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * c;
    check_finite(out, "scale");
    if (tracked) {
        record([a, out, c]() mutable {
            const auto& g = out.grad();
            double* ag = a.grad().data();
            for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i] * c;
        });
    }
    return out;
}

Tensor Graph::matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    if (a.ndim() != 2 || b.ndim() != 2)
        throw DimensionError("matmul: inputs must be 2-D, got " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
    const int m = trans_a ? a.dim(1) : a.dim(0);
    const int k = trans_a ? a.dim(0) : a.dim(1);
    const int kb = trans_b ? b.dim(1) : b.dim(0);
    const int n = trans_b ? b.dim(0) : b.dim(1);
    if (k != kb)
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                             (trans_a ? "^T" : "") + " x " + shape_str(b.shape()) +
                             (trans_b ? "^T" : ""));

    const bool tracked = track(a, b);
    Tensor out = make_like({m, n}, tracked);
    dense_mm(out.data().data(), a.data().data(), b.data().data(), m, k, n, trans_a, trans_b);
    check_finite(out, "matmul");
    if (tracked) {
        record([a, b, out, m, k, n, trans_a, trans_b]() mutable {
            const double* g = out.grad().data();
            if (a.requires_grad()) {
                if (!trans_a)
                    dense_mm(a.grad().data(), g, b.data().data(), m, n, k, false, !trans_b);
                else
                    dense_mm(a.grad().data(), b.data().data(), g, k, n, m, trans_b, true);
            }
            if (b.requires_grad()) {
                if (!trans_b)
                    dense_mm(b.grad().data(), a.data().data(), g, k, m, n, !trans_a, false);
                else
                    dense_mm(b.grad().data(), g, a.data().data(), n, m, k, true, trans_a);
            }
        });
    }
    return out;
}

Tensor Graph::tanh(const Tensor& x) {
    const bool tracked = track(x);
    Tensor out = make_like(x.shape(), tracked);
    for (std::size_t i = 0; i < x.numel(); ++i) out.data()[i] = std::tanh(x.data()[i]);
    check_finite(out, "tanh");
    if (tracked) {
        record([x, out]() mutable {
            const auto& g = out.grad();
            double* xg = x.grad().data();
            const double* y = out.data().data();
            for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i] * (1.0 - y[i] * y[i]);
        });
    }
    return out;
}

Tensor Graph::relu(const Tensor& x) {
    const bool tracked = track(x);
    Tensor out = make_like(x.shape(), tracked);
    for (std::size_t i = 0; i < x.numel(); ++i) out.data()[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
    check_finite(out, "relu");
    if (tracked) {
        record([x, out]() mutable {
            const auto& g = out.grad();
            double* xg = x.grad().data();
            const double* xd = x.data().data();
            for (std::size_t i = 0; i < g.size(); ++i)
                if (xd[i] > 0.0) xg[i] += g[i];
        });
    }
    return out;
}

Tensor Graph::sigmoid(const Tensor& x) {
    const bool tracked = track(x);
    Tensor out = make_like(x.shape(), tracked);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double v = x.data()[i];
        // Split by sign to avoid overflow in exp.
        out.data()[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                 : std::exp(v) / (1.0 + std::exp(v));
    }
    check_finite(out, "sigmoid");
    if (tracked) {
        record([x, out]() mutable {
            const auto& g = out.grad();
            double* xg = x.grad().data();
            const double* y = out.data().data();
            for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i] * y[i] * (1.0 - y[i]);
        });
    }
    return out;
}

Tensor Graph::activation(const Tensor& x, Activation kind) {
    switch (kind) {
    case Activation::tanh: return tanh(x);
    case Activation::relu: return relu(x);
    case Activation::sigmoid: return sigmoid(x);
    }
    throw ConfigError("unknown activation kind");
}

Tensor Graph::softmax_temperature(const Tensor& scores, double tau) {
    if (tau <= 0.0) throw ConfigError("softmax temperature must be positive");
    if (scores.ndim() != 1)
        throw DimensionError("softmax_temperature expects a 1-D tensor, got " +
                             shape_str(scores.shape()));
    const std::size_t n = scores.numel();
    const bool tracked = track(scores);
    Tensor out = make_like(scores.shape(), tracked);

    double max_s = scores.data()[0];
    for (double v : scores.data()) max_s = std::max(max_s, v);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.data()[i] = std::exp((scores.data()[i] - max_s) / tau);
        denom += out.data()[i];
    }
    for (std::size_t i = 0; i < n; ++i) out.data()[i] /= denom;
    check_finite(out, "softmax_temperature");

    if (tracked) {
        record([scores, out, tau]() mutable {
            const auto& g = out.grad();
            double* sg = scores.grad().data();
            const double* p = out.data().data();
            double dot = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * p[i];
            for (std::size_t i = 0; i < g.size(); ++i) sg[i] += (g[i] - dot) * p[i] / tau;
        });
    }
    return out;
}

Tensor Graph::batch_norm(const Tensor& x, BatchNormState& state, const Tensor& gamma,
                         const Tensor& beta, BnMode mode) {
    if (x.ndim() != 2 && x.ndim() != 4)
        throw DimensionError("batch_norm expects a 2-D or 4-D tensor");
    const int batch = x.dim(0);
    const int channels = x.dim(1);
    const int inner = x.ndim() == 4 ? x.dim(2) * x.dim(3) : 1;
    const auto uchannels = static_cast<std::size_t>(channels);
    if (gamma.numel() != uchannels || beta.numel() != uchannels ||
        state.running_mean.size() != uchannels || state.running_var.size() != uchannels)
        throw DimensionError("batch_norm: per-channel parameter size mismatch");

    const std::size_t per = static_cast<std::size_t>(batch) * static_cast<std::size_t>(inner);
    const bool tracked = recording_ && (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
    Tensor out = make_like(x.shape(), tracked);

    auto idx = [channels, inner](int b, int c, int p) {
        return (static_cast<std::size_t>(b) * channels + static_cast<std::size_t>(c)) * inner +
               static_cast<std::size_t>(p);
    };

    std::vector<double> mean(uchannels), var(uchannels);
    if (mode == BnMode::train) {
        if (per == 0) throw DimensionError("batch_norm: empty batch in train mode");
        for (int c = 0; c < channels; ++c) {
            double m = 0.0;
            for (int b = 0; b < batch; ++b)
                for (int p = 0; p < inner; ++p) m += x.data()[idx(b, c, p)];
            m /= static_cast<double>(per);
            double v = 0.0;
            for (int b = 0; b < batch; ++b)
                for (int p = 0; p < inner; ++p) {
                    const double d = x.data()[idx(b, c, p)] - m;
                    v += d * d;
                }
            v /= static_cast<double>(per);
            mean[static_cast<std::size_t>(c)] = m;
            var[static_cast<std::size_t>(c)] = v;
            state.running_mean[static_cast<std::size_t>(c)] =
                (1.0 - state.momentum) * state.running_mean[static_cast<std::size_t>(c)] + state.momentum * m;
            state.running_var[static_cast<std::size_t>(c)] =
                (1.0 - state.momentum) * state.running_var[static_cast<std::size_t>(c)] + state.momentum * v;
        }
    } else {
        mean = state.running_mean;
        var = state.running_var;
    }

    // Normalized values are kept for the backward pass.
    std::vector<double> xhat(x.numel());
    std::vector<double> invstd(uchannels);
    for (int c = 0; c < channels; ++c)
        invstd[static_cast<std::size_t>(c)] = 1.0 / std::sqrt(var[static_cast<std::size_t>(c)] + state.eps);
    for (int b = 0; b < batch; ++b)
        for (int c = 0; c < channels; ++c) {
            const double m = mean[static_cast<std::size_t>(c)];
            const double is = invstd[static_cast<std::size_t>(c)];
            const double gm = gamma.data()[static_cast<std::size_t>(c)];
            const double bt = beta.data()[static_cast<std::size_t>(c)];
            for (int p = 0; p < inner; ++p) {
                const std::size_t i = idx(b, c, p);
                xhat[i] = (x.data()[i] - m) * is;
                out.data()[i] = gm * xhat[i] + bt;
            }
        }
    check_finite(out, "batch_norm");

    if (tracked) {
        const bool train = mode == BnMode::train;
        record([x, gamma, beta, out, xhat = std::move(xhat), invstd = std::move(invstd), batch,
                channels, inner, per, train, idx]() mutable {
            const double* g = out.grad().data();
            double* xg = x.requires_grad() ? x.grad().data() : nullptr;
            for (int c = 0; c < channels; ++c) {
                const std::size_t uc = static_cast<std::size_t>(c);
                double sum_g = 0.0, sum_gx = 0.0;
                for (int b = 0; b < batch; ++b)
                    for (int p = 0; p < inner; ++p) {
                        const std::size_t i = idx(b, c, p);
                        sum_g += g[i];
                        sum_gx += g[i] * xhat[i];
                    }
                if (beta.requires_grad()) beta.grad()[uc] += sum_g;
                if (gamma.requires_grad()) gamma.grad()[uc] += sum_gx;
                if (xg != nullptr) {
                    const double gm = gamma.data()[uc];
                    const double is = invstd[uc];
                    if (train) {
                        const double np = static_cast<double>(per);
                        for (int b = 0; b < batch; ++b)
                            for (int p = 0; p < inner; ++p) {
                                const std::size_t i = idx(b, c, p);
                                xg[i] += gm * is / np * (np * g[i] - sum_g - xhat[i] * sum_gx);
                            }
                    } else {
                        for (int b = 0; b < batch; ++b)
                            for (int p = 0; p < inner; ++p) {
                                const std::size_t i = idx(b, c, p);
                                xg[i] += gm * is * g[i];
                            }
                    }
                }
            }
        });
    }
    return out;
}

Tensor Graph::sum(const Tensor& x) {
    const bool tracked = track(x);
    Tensor out = make_like({1}, tracked);
    double s = 0.0;
    for (double v : x.data()) s += v;
    out.data()[0] = s;
    check_finite(out, "sum");
    if (tracked) {
        record([x, out]() mutable {
            const double g = out.grad()[0];
            double* xg = x.grad().data();
            for (std::size_t i = 0; i < x.numel(); ++i) xg[i] += g;
        });
    }
    return out;
}

Tensor Graph::mean(const Tensor& x) {
    if (x.numel() == 0) throw DimensionError("mean of empty tensor");
    const bool tracked = track(x);
    Tensor out = make_like({1}, tracked);
    double s = 0.0;
    for (double v : x.data()) s += v;
    out.data()[0] = s / static_cast<double>(x.numel());
    check_finite(out, "mean");
    if (tracked) {
        record([x, out]() mutable {
            const double g = out.grad()[0] / static_cast<double>(x.numel());
            double* xg = x.grad().data();
            for (std::size_t i = 0; i < x.numel(); ++i) xg[i] += g;
        });
    }
    return out;
}

Tensor Graph::row_sum(const Tensor& x) {
    if (x.ndim() != 2) throw DimensionError("row_sum expects a 2-D tensor");
    const int m = x.dim(0), n = x.dim(1);
    const bool tracked = track(x);
    Tensor out = make_like({m}, tracked);
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += x.data()[static_cast<std::size_t>(i) * n + j];
        out.data()[static_cast<std::size_t>(i)] = s;
    }
    check_finite(out, "row_sum");
    if (tracked) {
        record([x, out, m, n]() mutable {
            const double* g = out.grad().data();
            double* xg = x.grad().data();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) xg[static_cast<std::size_t>(i) * n + j] += g[i];
        });
    }
    return out;
}

Tensor Graph::col_sum(const Tensor& x) {
    if (x.ndim() != 2) throw DimensionError("col_sum expects a 2-D tensor");
    const int m = x.dim(0), n = x.dim(1);
    const bool tracked = track(x);
    Tensor out = make_like({n}, tracked);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out.data()[static_cast<std::size_t>(j)] += x.data()[static_cast<std::size_t>(i) * n + j];
    check_finite(out, "col_sum");
    if (tracked) {
        record([x, out, m, n]() mutable {
            const double* g = out.grad().data();
            double* xg = x.grad().data();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) xg[static_cast<std::size_t>(i) * n + j] += g[j];
        });
    }
    return out;
}

Tensor Graph::scale_rows(const Tensor& x, const Tensor& v) {
    if (x.ndim() != 2 || v.ndim() != 1 || v.dim(0) != x.dim(0))
        throw DimensionError("scale_rows: need MxN and M, got " + shape_str(x.shape()) + " and " +
                             shape_str(v.shape()));
    const int m = x.dim(0), n = x.dim(1);
    const bool tracked = track(x, v);
    Tensor out = make_like(x.shape(), tracked);
    for (int i = 0; i < m; ++i) {
        const double s = v.data()[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j)
            out.data()[static_cast<std::size_t>(i) * n + j] = x.data()[static_cast<std::size_t>(i) * n + j] * s;
    }
    check_finite(out, "scale_rows");
    if (tracked) {
        record([x, v, out, m, n]() mutable {
            const auto& g = out.grad();
            const double* vd = v.data().data();
            const double* xd = x.data().data();
            double* xg = x.requires_grad() ? x.grad().data() : nullptr;
            double* vg = v.requires_grad() ? v.grad().data() : nullptr;
            for (int i = 0; i < m; ++i) {
                const std::size_t row = static_cast<std::size_t>(i) * n;
                if (xg != nullptr) {
                    const double s = vd[static_cast<std::size_t>(i)];
                    for (int j = 0; j < n; ++j) xg[row + j] += g[row + j] * s;
                }
                if (vg != nullptr) {
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j) acc += g[row + j] * xd[row + j];
                    vg[static_cast<std::size_t>(i)] += acc;
                }
            }
        });
    }
    return out;
}

Tensor Graph::scale_cols(const Tensor& x, const Tensor& v) {
    if (x.ndim() != 2 || v.ndim() != 1 || v.dim(0) != x.dim(1))
        throw DimensionError("scale_cols: need MxN and N, got " + shape_str(x.shape()) + " and " +
                             shape_str(v.shape()));
    const int m = x.dim(0), n = x.dim(1);
    const bool tracked = track(x, v);
    Tensor out = make_like(x.shape(), tracked);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out.data()[static_cast<std::size_t>(i) * n + j] =
                x.data()[static_cast<std::size_t>(i) * n + j] * v.data()[static_cast<std::size_t>(j)];
    check_finite(out, "scale_cols");
    if (tracked) {
        record([x, v, out, m, n]() mutable {
            const auto& g = out.grad();
            const double* vd = v.data().data();
            const double* xd = x.data().data();
            double* xg = x.requires_grad() ? x.grad().data() : nullptr;
            double* vg = v.requires_grad() ? v.grad().data() : nullptr;
            for (int i = 0; i < m; ++i) {
                const std::size_t row = static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j) {
                    if (xg != nullptr) xg[row + j] += g[row + j] * vd[static_cast<std::size_t>(j)];
                    if (vg != nullptr) vg[static_cast<std::size_t>(j)] += g[row + j] * xd[row + j];
                }
            }
        });
    }
    return out;
}

Tensor Graph::rsqrt_clamped(const Tensor& x, double floor_value) {
    const bool tracked = track(x);
    Tensor out = make_like(x.shape(), tracked);
    for (std::size_t i = 0; i < x.numel(); ++i)
        out.data()[i] = 1.0 / std::sqrt(std::max(x.data()[i], floor_value));
    check_finite(out, "rsqrt_clamped");
    if (tracked) {
        record([x, out, floor_value]() mutable {
            const auto& g = out.grad();
            double* xg = x.grad().data();
            const double* xd = x.data().data();
            const double* y = out.data().data();
            for (std::size_t i = 0; i < g.size(); ++i)
                if (xd[i] > floor_value) xg[i] += g[i] * (-0.5 * y[i] * y[i] * y[i]);
        });
    }
    return out;
}

Tensor Graph::recip_clamped(const Tensor& x, double floor_value) {
    const bool tracked = track(x);
    Tensor out = make_like(x.shape(), tracked);
    for (std::size_t i = 0; i < x.numel(); ++i)
        out.data()[i] = 1.0 / std::max(x.data()[i], floor_value);
    check_finite(out, "recip_clamped");
    if (tracked) {
        record([x, out, floor_value]() mutable {
            const auto& g = out.grad();
            double* xg = x.grad().data();
            const double* xd = x.data().data();
            const double* y = out.data().data();
            for (std::size_t i = 0; i < g.size(); ++i)
                if (xd[i] > floor_value) xg[i] += g[i] * (-y[i] * y[i]);
        });
    }
    return out;
}

Tensor Graph::reshape(const Tensor& x, Shape new_shape) {
    if (shape_numel(new_shape) != x.numel())
        throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                             shape_str(new_shape));
    const bool tracked = track(x);
    Tensor out = Tensor::from_data(std::move(new_shape), x.data(), tracked);
    if (tracked) {
        record([x, out]() mutable {
            const auto& g = out.grad();
            double* xg = x.grad().data();
            for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i];
        });
    }
    return out;
}

Tensor Graph::permute4(const Tensor& x, std::array<int, 4> perm) {
    if (x.ndim() != 4) throw DimensionError("permute4 expects a 4-D tensor");
    Shape out_shape(4);
    for (int i = 0; i < 4; ++i) out_shape[static_cast<std::size_t>(i)] = x.dim(perm[static_cast<std::size_t>(i)]);
    const bool tracked = track(x);
    Tensor out = make_like(out_shape, tracked);

    const auto& xs = x.shape();
    std::array<std::size_t, 4> xstride{};
    xstride[3] = 1;
    for (int i = 2; i >= 0; --i)
        xstride[static_cast<std::size_t>(i)] =
            xstride[static_cast<std::size_t>(i + 1)] * static_cast<std::size_t>(xs[static_cast<std::size_t>(i + 1)]);

    // out[(i0,i1,i2,i3)] = x[perm applied], recorded as a flat index map.
    std::vector<std::size_t> src_index(x.numel());
    std::size_t o = 0;
    for (int i0 = 0; i0 < out_shape[0]; ++i0)
        for (int i1 = 0; i1 < out_shape[1]; ++i1)
            for (int i2 = 0; i2 < out_shape[2]; ++i2)
                for (int i3 = 0; i3 < out_shape[3]; ++i3) {
                    const std::array<int, 4> oi{i0, i1, i2, i3};
                    std::size_t xi = 0;
                    for (int d = 0; d < 4; ++d)
                        xi += xstride[static_cast<std::size_t>(perm[static_cast<std::size_t>(d)])] *
                              static_cast<std::size_t>(oi[static_cast<std::size_t>(d)]);
                    out.data()[o] = x.data()[xi];
                    src_index[o] = xi;
                    ++o;
                }
    if (tracked) {
        record([x, out, src_index = std::move(src_index)]() mutable {
            const auto& g = out.grad();
            double* xg = x.grad().data();
            for (std::size_t i = 0; i < g.size(); ++i) xg[src_index[i]] += g[i];
        });
    }
    return out;
}

Tensor Graph::concat_channels(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_channels: empty input list");
    const Tensor& first = parts.front();
    if (first.ndim() != 4) throw DimensionError("concat_channels expects 4-D tensors");
    int total_c = 0;
    bool any_grad = false;
    for (const auto& p : parts) {
        if (p.ndim() != 4 || p.dim(0) != first.dim(0) || p.dim(2) != first.dim(2) ||
            p.dim(3) != first.dim(3))
            throw DimensionError("concat_channels: incompatible shapes");
        total_c += p.dim(1);
        any_grad = any_grad || p.requires_grad();
    }
    const bool tracked = recording_ && any_grad;
    const int b_n = first.dim(0);
    const std::size_t inner = static_cast<std::size_t>(first.dim(2)) * static_cast<std::size_t>(first.dim(3));
    Tensor out = make_like({first.dim(0), total_c, first.dim(2), first.dim(3)}, tracked);

    std::vector<int> offsets;
    int c_off = 0;
    for (const auto& p : parts) {
        offsets.push_back(c_off);
        for (int b = 0; b < b_n; ++b) {
            const std::size_t src = static_cast<std::size_t>(b) * static_cast<std::size_t>(p.dim(1)) * inner;
            const std::size_t dst =
                (static_cast<std::size_t>(b) * static_cast<std::size_t>(total_c) + static_cast<std::size_t>(c_off)) * inner;
            std::copy_n(p.data().begin() + static_cast<std::ptrdiff_t>(src),
                        static_cast<std::size_t>(p.dim(1)) * inner,
                        out.data().begin() + static_cast<std::ptrdiff_t>(dst));
        }
        c_off += p.dim(1);
    }
    if (tracked) {
        record([parts, out, offsets, total_c, b_n, inner]() mutable {
            const double* g = out.grad().data();
            for (std::size_t pi = 0; pi < parts.size(); ++pi) {
                Tensor p = parts[pi];
                if (!p.requires_grad()) continue;
                double* pg = p.grad().data();
                const std::size_t pc = static_cast<std::size_t>(p.dim(1));
                for (int b = 0; b < b_n; ++b) {
                    const std::size_t dst = static_cast<std::size_t>(b) * pc * inner;
                    const std::size_t src =
                        (static_cast<std::size_t>(b) * static_cast<std::size_t>(total_c) +
                         static_cast<std::size_t>(offsets[pi])) * inner;
                    for (std::size_t i = 0; i < pc * inner; ++i) pg[dst + i] += g[src + i];
                }
            }
        });
    }
    return out;
}

Tensor Graph::concat_cols(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(0) != b.dim(0))
        throw DimensionError("concat_cols: need matching row counts");
    const int m = a.dim(0), na = a.dim(1), nb = b.dim(1);
    const bool tracked = track(a, b);
    Tensor out = make_like({m, na + nb}, tracked);
    for (int i = 0; i < m; ++i) {
        std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(i) * na, na,
                    out.data().begin() + static_cast<std::ptrdiff_t>(i) * (na + nb));
        std::copy_n(b.data().begin() + static_cast<std::ptrdiff_t>(i) * nb, nb,
                    out.data().begin() + static_cast<std::ptrdiff_t>(i) * (na + nb) + na);
    }
    if (tracked) {
        record([a, b, out, m, na, nb]() mutable {
            const auto& g = out.grad();
            double* ag = a.requires_grad() ? a.grad().data() : nullptr;
            double* bg = b.requires_grad() ? b.grad().data() : nullptr;
            for (int i = 0; i < m; ++i) {
                const std::size_t row = static_cast<std::size_t>(i) * (na + nb);
                if (ag != nullptr)
                    for (int j = 0; j < na; ++j) ag[static_cast<std::size_t>(i) * na + j] += g[row + j];
                if (bg != nullptr)
                    for (int j = 0; j < nb; ++j) bg[static_cast<std::size_t>(i) * nb + j] += g[row + na + j];
            }
        });
    }
    return out;
}

Tensor Graph::crop_time(const Tensor& x, int length) {
    if (x.ndim() != 4) throw DimensionError("crop_time expects a 4-D tensor");
    const int t = x.dim(3);
    if (length < 1 || length > t)
        throw DimensionError("crop_time: length " + std::to_string(length) + " out of range for T=" +
                             std::to_string(t));
    if (length == t) return x; // nothing to crop; reuse the input node
    const int head = x.dim(0) * x.dim(1) * x.dim(2);
    const int drop = t - length;
    const bool tracked = track(x);
    Tensor out = make_like({x.dim(0), x.dim(1), x.dim(2), length}, tracked);
    for (int r = 0; r < head; ++r)
        std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(r) * t + drop, length,
                    out.data().begin() + static_cast<std::ptrdiff_t>(r) * length);
    if (tracked) {
        record([x, out, head, t, length, drop]() mutable {
            const auto& g = out.grad();
            double* xg = x.grad().data();
            for (int r = 0; r < head; ++r)
                for (int j = 0; j < length; ++j)
                    xg[static_cast<std::size_t>(r) * t + drop + j] +=
                        g[static_cast<std::size_t>(r) * length + j];
        });
    }
    return out;
}

Tensor Graph::conv_time(const Tensor& x, const Tensor& w, const Tensor& bias, int dilation) {
    if (x.ndim() != 4) throw DimensionError("conv_time: input must be B x C x N x T");
    if (w.ndim() != 3) throw DimensionError("conv_time: kernel must be Co x Ci x k");
    if (dilation < 1) throw ConfigError("conv_time: dilation must be >= 1");
    const int batch = x.dim(0), ci = x.dim(1), nodes = x.dim(2), t = x.dim(3);
    const int co = w.dim(0), wci = w.dim(1), k = w.dim(2);
    if (wci != ci)
        throw DimensionError("conv_time: kernel expects " + std::to_string(wci) +
                             " input channels, tensor has " + std::to_string(ci));
    if (bias.ndim() != 1 || bias.dim(0) != co)
        throw DimensionError("conv_time: bias size mismatch");
    const int t_out = t - (k - 1) * dilation;
    if (t_out < 1)
        throw ConfigError("conv_time: time length " + std::to_string(t) +
                          " too short for kernel " + std::to_string(k) + " dilation " +
                          std::to_string(dilation));

    const bool tracked = recording_ && (x.requires_grad() || w.requires_grad() || bias.requires_grad());
    Tensor out = make_like({batch, co, nodes, t_out}, tracked);

    const auto xof = [ci, nodes, t](int b, int c, int n) {
        return ((static_cast<std::size_t>(b) * ci + static_cast<std::size_t>(c)) * nodes +
                static_cast<std::size_t>(n)) * t;
    };
    const auto oof = [co, nodes, t_out](int b, int c, int n) {
        return ((static_cast<std::size_t>(b) * co + static_cast<std::size_t>(c)) * nodes +
                static_cast<std::size_t>(n)) * t_out;
    };
    const auto wof = [ci, k](int o, int c) {
        return (static_cast<std::size_t>(o) * ci + static_cast<std::size_t>(c)) * k;
    };

    {
        // Alias-free accumulator so the inner loops vectorize.
        constexpr int kStackCap = 256;
        double stack_acc[kStackCap];
        std::vector<double> heap_acc;
        double* __restrict acc = stack_acc;
        if (t_out > kStackCap) {
            heap_acc.resize(static_cast<std::size_t>(t_out));
            acc = heap_acc.data();
        }
        const double* xd = x.data().data();
        const double* wd = w.data().data();
        double* od = out.data().data();
        for (int b = 0; b < batch; ++b)
            for (int o = 0; o < co; ++o) {
                const double bv = bias.data()[static_cast<std::size_t>(o)];
                for (int n = 0; n < nodes; ++n) {
                    for (int tt = 0; tt < t_out; ++tt) acc[tt] = bv;
                    for (int c = 0; c < ci; ++c) {
                        const double* __restrict xrow = xd + xof(b, c, n);
                        const double* wrow = wd + wof(o, c);
                        for (int j = 0; j < k; ++j) {
                            const double wv = wrow[j];
                            if (wv == 0.0) continue;
                            const double* __restrict xs = xrow + j * dilation;
                            for (int tt = 0; tt < t_out; ++tt) acc[tt] += wv * xs[tt];
                        }
                    }
                    double* orow = od + oof(b, o, n);
                    for (int tt = 0; tt < t_out; ++tt) orow[tt] = acc[tt];
                }
            }
    }
    check_finite(out, "conv_time");

    if (tracked) {
        record([x, w, bias, out, batch, ci, co, nodes, t, t_out, k, dilation, xof, oof, wof]() mutable {
            (void)t;
            const double* g = out.grad().data();
            const double* xd = x.data().data();
            const double* wd = w.data().data();
            double* xg = x.requires_grad() ? x.grad().data() : nullptr;
            double* wg = w.requires_grad() ? w.grad().data() : nullptr;
            double* bg = bias.requires_grad() ? bias.grad().data() : nullptr;
            // Four-way partial sums keep the reductions pipelined.
            auto dot4 = [](const double* __restrict a, const double* __restrict b, int len) {
                double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
                int i = 0;
                for (; i + 4 <= len; i += 4) {
                    s0 += a[i] * b[i];
                    s1 += a[i + 1] * b[i + 1];
                    s2 += a[i + 2] * b[i + 2];
                    s3 += a[i + 3] * b[i + 3];
                }
                for (; i < len; ++i) s0 += a[i] * b[i];
                return (s0 + s1) + (s2 + s3);
            };
            for (int b = 0; b < batch; ++b)
                for (int o = 0; o < co; ++o)
                    for (int n = 0; n < nodes; ++n) {
                        const double* grow = g + oof(b, o, n);
                        if (bg != nullptr) {
                            double acc = 0.0;
                            for (int tt = 0; tt < t_out; ++tt) acc += grow[tt];
                            bg[static_cast<std::size_t>(o)] += acc;
                        }
                        for (int c = 0; c < ci; ++c) {
                            const std::size_t xrow = xof(b, c, n);
                            const std::size_t wrow = wof(o, c);
                            for (int j = 0; j < k; ++j) {
                                const std::size_t base = xrow + static_cast<std::size_t>(j) * dilation;
                                if (wg != nullptr)
                                    wg[wrow + static_cast<std::size_t>(j)] += dot4(grow, xd + base, t_out);
                                if (xg != nullptr) {
                                    const double wv = wd[wrow + static_cast<std::size_t>(j)];
                                    if (wv == 0.0) continue;
                                    double* __restrict xgs = xg + base;
                                    for (int tt = 0; tt < t_out; ++tt) xgs[tt] += wv * grow[tt];
                                }
                            }
                        }
                    }
        });
    }
    return out;
}

Tensor Graph::node_mix(const Tensor& x, const Tensor& m) {
    if (x.ndim() != 4) throw DimensionError("node_mix: input must be B x C x N x T");
    if (m.ndim() != 2 || m.dim(0) != m.dim(1) || m.dim(0) != x.dim(2))
        throw DimensionError("node_mix: operator must be N x N with N = " + std::to_string(x.dim(2)));
    const int batch = x.dim(0), ch = x.dim(1), nodes = x.dim(2), t = x.dim(3);
    const bool tracked = track(x, m);
    Tensor out = make_like(x.shape(), tracked);

    const auto rof = [ch, nodes, t](int b, int c, int n) {
        return ((static_cast<std::size_t>(b) * ch + static_cast<std::size_t>(c)) * nodes +
                static_cast<std::size_t>(n)) * t;
    };

    for (int b = 0; b < batch; ++b)
        for (int c = 0; c < ch; ++c)
            for (int i = 0; i < nodes; ++i) {
                double* orow = out.data().data() + rof(b, c, i);
                const double* mrow = m.data().data() + static_cast<std::size_t>(i) * nodes;
                for (int j = 0; j < nodes; ++j) {
                    const double mv = mrow[j];
                    if (mv == 0.0) continue;
                    const double* xrow = x.data().data() + rof(b, c, j);
                    for (int tt = 0; tt < t; ++tt) orow[tt] += mv * xrow[tt];
                }
            }
    check_finite(out, "node_mix");

    if (tracked) {
        record([x, m, out, batch, ch, nodes, t, rof]() mutable {
            const double* g = out.grad().data();
            const double* xd = x.data().data();
            const double* md = m.data().data();
            double* xg = x.requires_grad() ? x.grad().data() : nullptr;
            double* mg = m.requires_grad() ? m.grad().data() : nullptr;
            for (int b = 0; b < batch; ++b)
                for (int c = 0; c < ch; ++c)
                    for (int i = 0; i < nodes; ++i) {
                        const double* grow = g + rof(b, c, i);
                        for (int j = 0; j < nodes; ++j) {
                            const std::size_t xrow = rof(b, c, j);
                            if (mg != nullptr) {
                                const double* xs = xd + xrow;
                                double acc = 0.0;
                                for (int tt = 0; tt < t; ++tt) acc += grow[tt] * xs[tt];
                                mg[static_cast<std::size_t>(i) * nodes + j] += acc;
                            }
                            if (xg != nullptr) {
                                const double mv = md[static_cast<std::size_t>(i) * nodes + j];
                                if (mv == 0.0) continue;
                                double* xgs = xg + xrow;
                                for (int tt = 0; tt < t; ++tt) xgs[tt] += mv * grow[tt];
                            }
                        }
                    }
        });
    }
    return out;
}

Tensor Graph::mse(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mse");
    Tensor d = sub(pred, target);
    return mean(mul(d, d));
}

} // namespace hyperts::num
