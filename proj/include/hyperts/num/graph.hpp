#pragma once

#include <array>
#include <functional>
#include <vector>

#include "hyperts/num/tensor.hpp"

namespace hyperts::num {

enum class Activation { tanh, relu, sigmoid };
enum class BnMode { train, eval };

/// Running statistics for batch normalization. These are buffers, not
/// trainable tensors; they are updated in train mode and read in eval mode.
struct BatchNormState {
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    static BatchNormState init(int features) {
        BatchNormState s;
        s.running_mean.assign(static_cast<std::size_t>(features), 0.0);
        s.running_var.assign(static_cast<std::size_t>(features), 1.0);
        return s;
    }
};

/// Reverse-mode autodiff tape. Ops execute eagerly and, when recording,
/// append a backward closure; backward() replays the tape in reverse, so
/// gradients accumulate in a fixed deterministic order and every recorded
/// node is visited exactly once.
///
/// A Graph is single-threaded. Independent graphs on separate threads may
/// share read-only parameter tensors but must not run backward on them
/// concurrently.
class Graph {
public:
    explicit Graph(bool recording = true) : recording_(recording) {}

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    bool recording() const { return recording_; }
    std::size_t num_ops() const { return tape_.size(); }

    // Elementwise arithmetic (shapes must match exactly).
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    Tensor add_scalar(const Tensor& a, double c);
    Tensor scale(const Tensor& a, double c);

    /// Matrix product of 2-D tensors with optional transposes.
    Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);

    Tensor tanh(const Tensor& x);
    Tensor relu(const Tensor& x);
    Tensor sigmoid(const Tensor& x);
    Tensor activation(const Tensor& x, Activation kind);

    /// Softmax of a 1-D score vector with temperature tau > 0.
    Tensor softmax_temperature(const Tensor& scores, double tau);

    /// Per-channel batch normalization. x is B x C (features = C) or
    /// B x C x N x T (statistics over B, N, T per channel).
    Tensor batch_norm(const Tensor& x, BatchNormState& state, const Tensor& gamma,
                      const Tensor& beta, BnMode mode);

    // Reductions.
    Tensor sum(const Tensor& x);
    Tensor mean(const Tensor& x);
    Tensor row_sum(const Tensor& x); // 2-D MxN -> M
    Tensor col_sum(const Tensor& x); // 2-D MxN -> N

    // Row/column scaling of a 2-D tensor by a vector.
    Tensor scale_rows(const Tensor& x, const Tensor& v);
    Tensor scale_cols(const Tensor& x, const Tensor& v);

    /// Elementwise 1/sqrt(max(x, floor)) and 1/max(x, floor).
    Tensor rsqrt_clamped(const Tensor& x, double floor_value);
    Tensor recip_clamped(const Tensor& x, double floor_value);

    Tensor reshape(const Tensor& x, Shape new_shape);
    Tensor permute4(const Tensor& x, std::array<int, 4> perm);

    /// Concatenate 4-D tensors along the channel axis (axis 1).
    Tensor concat_channels(const std::vector<Tensor>& parts);
    /// Concatenate 2-D tensors along columns.
    Tensor concat_cols(const Tensor& a, const Tensor& b);

    /// Keep the last `length` steps of the time axis of a 4-D tensor.
    Tensor crop_time(const Tensor& x, int length);

    /// Dilated convolution along the time axis of x: B x Ci x N x T with
    /// kernel w: Co x Ci x k and bias Co. Output time length shrinks to
    /// T - (k-1)*dilation; tap j reads input at t' + j*dilation, so the
    /// output at position t aligns with input time t + (k-1)*dilation and
    /// never sees later samples.
    Tensor conv_time(const Tensor& x, const Tensor& w, const Tensor& bias, int dilation);

    /// Mix node axis of x: B x C x N x T with operator m: N x N,
    /// out[b,c,i,t] = sum_j m[i,j] * x[b,c,j,t].
    Tensor node_mix(const Tensor& x, const Tensor& m);

    /// Mean squared error between same-shape tensors (composed op).
    Tensor mse(const Tensor& pred, const Tensor& target);

    /// Propagate d(loss)/d(tensor) into every recorded requires_grad
    /// tensor. loss must be scalar. Throws StateError if called twice
    /// without reset().
    void backward(const Tensor& loss);
    void reset();

private:
    std::vector<std::function<void()>> tape_;
    bool recording_;
    bool backward_done_ = false;

    bool track(const Tensor& a) const;
    bool track(const Tensor& a, const Tensor& b) const;
    Tensor make_like(Shape shape, bool tracked) const;
    void record(std::function<void()> fn);
};

} // namespace hyperts::num
