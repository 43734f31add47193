#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "hyperts/core/error.hpp"

namespace hyperts::num {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major tensor of doubles with an optional gradient buffer.
/// Tensor is a cheap handle: copies share the same storage, so parameters
/// can live across many compute graphs while each graph records closures
/// against the same buffers.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor identity(int n);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const& { return impl_->shape; }
    const Shape& shape() const&& = delete;
    int ndim() const { return static_cast<int>(impl_->shape.size()); }
    int dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
    std::size_t numel() const { return impl_->data.size(); }

    /// Storage accessors are const: a Tensor is a handle, and constness of
    /// the handle does not extend to the shared buffers (same convention as
    /// shared_ptr). Ops capture handles by value in backward closures.
    /// Rvalue overloads are deleted so a reference can never outlive an
    /// unnamed temporary handle.
    std::vector<double>& data() const& { return impl_->data; }
    std::vector<double>& data() const&& = delete;

    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    void set_requires_grad(bool on) const;

    /// Gradient buffer; only valid when requires_grad is set.
    std::vector<double>& grad() const&;
    std::vector<double>& grad() const&& = delete;
    void zero_grad() const;

    /// Scalar convenience accessor; throws unless numel() == 1.
    double value() const;

    /// True when the two handles share storage.
    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

    /// Deep copy with detached storage (gradients reset).
    Tensor clone() const;

private:
    struct Impl {
        Shape shape;
        std::vector<double> data;
        std::vector<double> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Impl> impl_;

    explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
};

} // namespace hyperts::num
