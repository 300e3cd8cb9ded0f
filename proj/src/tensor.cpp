#include "ndvad/tensor.hpp"

#include <cmath>
#include <sstream>

#include "ndvad/autodiff.hpp"

namespace ndvad {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

std::vector<std::int64_t> row_major_strides(const Shape& shape) {
  std::vector<std::int64_t> strides(shape.size(), 1);
  for (std::int64_t i = static_cast<std::int64_t>(shape.size()) - 2; i >= 0; --i) {
    strides[i] = strides[i + 1] * shape[i + 1];
  }
  return strides;
}

namespace {
void quantize(std::vector<double>& data, DType dtype) {
  if (dtype != DType::F32) return;
  for (auto& v : data) v = static_cast<double>(static_cast<float>(v));
}
}  // namespace

Tensor make_tensor_raw(std::vector<double> data, Shape shape, DType dtype, bool requires_grad) {
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
    throw DimensionError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  }
  quantize(data, dtype);
  Tensor t;
  t.impl_ = std::make_shared<TensorImpl>();
  t.impl_->shape = std::move(shape);
  t.impl_->dtype = dtype;
  t.impl_->data = std::move(data);
  t.impl_->requires_grad = requires_grad;
  t.impl_->seq = next_node_seq();
  return t;
}

void attach_node(Tensor& t, std::shared_ptr<Node> node) { t.impl_->node = std::move(node); }

Tensor Tensor::from(std::vector<double> data, Shape shape, DType dtype, bool requires_grad) {
  return make_tensor_raw(std::move(data), std::move(shape), dtype, requires_grad);
}

Tensor Tensor::scalar(double v, DType dtype, bool requires_grad) {
  return make_tensor_raw({v}, {}, dtype, requires_grad);
}

Tensor Tensor::zeros(Shape shape, DType dtype, bool requires_grad) {
  std::vector<double> d(static_cast<std::size_t>(shape_numel(shape)), 0.0);
  return make_tensor_raw(std::move(d), std::move(shape), dtype, requires_grad);
}

Tensor Tensor::ones(Shape shape, DType dtype, bool requires_grad) {
  return full(std::move(shape), 1.0, dtype, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, DType dtype, bool requires_grad) {
  std::vector<double> d(static_cast<std::size_t>(shape_numel(shape)), v);
  return make_tensor_raw(std::move(d), std::move(shape), dtype, requires_grad);
}

std::int64_t Tensor::dim(std::int64_t axis) const {
  if (axis < 0 || axis >= rank()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(shape()));
  }
  return impl_->shape[axis];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() requires a single-element tensor, got shape " +
                        shape_str(shape()));
  }
  return impl_->data[0];
}

Tensor Tensor::grad() const {
  if (!impl_ || !impl_->grad) return Tensor();
  return *impl_->grad;
}

void Tensor::clear_grad() const {
  if (impl_) impl_->grad.reset();
}

Tensor Tensor::detached(bool requires_grad) const {
  return make_tensor_raw(data(), shape(), dtype(), requires_grad);
}

Tensor Tensor::to(DType dtype) const {
  if (dtype == this->dtype()) return *this;
  return make_tensor_raw(data(), shape(), dtype, requires_grad());
}

bool Tensor::all_finite() const {
  for (double v : data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace ndvad
