#include "hyperts/num/tensor.hpp"

#include <numeric>
#include <sstream>

namespace hyperts::num {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw DimensionError("negative dimension in shape " + shape_str(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    auto impl = std::make_shared<Impl>();
    std::size_t n = shape_numel(shape);
    impl->shape = std::move(shape);
    impl->data.assign(n, value);
    impl->requires_grad = requires_grad;
    if (requires_grad) impl->grad.assign(n, 0.0);
    return Tensor(std::move(impl));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    if (shape_numel(shape) != data.size())
        throw DimensionError("from_data: " + std::to_string(data.size()) +
                             " values for shape " + shape_str(shape));
    auto impl = std::make_shared<Impl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    if (requires_grad) impl->grad.assign(impl->data.size(), 0.0);
    return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

Tensor Tensor::identity(int n) {
    Tensor t = zeros({n, n});
    for (int i = 0; i < n; ++i) t.data()[static_cast<std::size_t>(i) * n + i] = 1.0;
    return t;
}

void Tensor::set_requires_grad(bool on) const {
    impl_->requires_grad = on;
    if (on)
        impl_->grad.assign(impl_->data.size(), 0.0);
    else
        impl_->grad.clear();
}

std::vector<double>& Tensor::grad() const& {
    if (!impl_->requires_grad) throw StateError("grad() on a tensor without requires_grad");
    return impl_->grad;
}

void Tensor::zero_grad() const {
    if (impl_->requires_grad) impl_->grad.assign(impl_->data.size(), 0.0);
}

double Tensor::value() const {
    if (numel() != 1) throw DimensionError("value() on non-scalar tensor " + shape_str(shape()));
    return impl_->data[0];
}

Tensor Tensor::clone() const {
    return from_data(impl_->shape, impl_->data, impl_->requires_grad);
}

} // namespace hyperts::num
