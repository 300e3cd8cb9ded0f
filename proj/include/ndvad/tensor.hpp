#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ndvad/errors.hpp"

namespace ndvad {

enum class DType : std::uint8_t { F32 = 1, F64 = 2 };

inline const char* dtype_name(DType d) { return d == DType::F32 ? "f32" : "f64"; }

class Tensor;
struct Node;

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl {
  Shape shape;
  DType dtype = DType::F32;
  std::vector<double> data;  // row-major; F32 tensors hold float-rounded values
  bool requires_grad = false;
  std::shared_ptr<Node> node;           // producing op, null for leaves/constants
  std::unique_ptr<Tensor> grad;         // set on leaves by backward()
  std::int64_t seq = 0;
};

// Value-semantics handle to an immutable dense tensor. Arithmetic runs in
// double; tensors tagged F32 round every result through float so that stored
// values are always exactly float-representable (checkpoints round-trip
// bit-exactly).
class Tensor {
 public:
  Tensor() = default;

  static Tensor from(std::vector<double> data, Shape shape, DType dtype = DType::F32,
                     bool requires_grad = false);
  static Tensor scalar(double v, DType dtype = DType::F32, bool requires_grad = false);
  static Tensor zeros(Shape shape, DType dtype = DType::F32, bool requires_grad = false);
  static Tensor ones(Shape shape, DType dtype = DType::F32, bool requires_grad = false);
  static Tensor full(Shape shape, double v, DType dtype = DType::F32, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return ref().shape; }
  std::int64_t rank() const { return static_cast<std::int64_t>(ref().shape.size()); }
  std::int64_t dim(std::int64_t axis) const;
  std::int64_t numel() const { return static_cast<std::int64_t>(ref().data.size()); }
  DType dtype() const { return ref().dtype; }
  const std::vector<double>& data() const { return ref().data; }
  double at(std::int64_t flat_index) const { return ref().data[static_cast<std::size_t>(flat_index)]; }
  double item() const;

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  bool is_leaf() const { return impl_ && impl_->node == nullptr; }
  Tensor grad() const;  // undefined Tensor when absent
  void clear_grad() const;

  // Copy of the payload with no graph history.
  Tensor detached(bool requires_grad = false) const;
  // Same payload reinterpreted with a new dtype tag (values re-rounded for F32).
  Tensor to(DType dtype) const;

  bool all_finite() const;

  TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<TensorImpl>& impl_ptr() const { return impl_; }

  std::shared_ptr<Node> node() const { return impl_ ? impl_->node : nullptr; }

 private:
  TensorImpl& ref() const {
    if (!impl_) throw ContractError("operation on undefined tensor");
    return *impl_;
  }
  friend Tensor make_tensor_raw(std::vector<double>, Shape, DType, bool);
  friend void attach_node(Tensor&, std::shared_ptr<Node>);
  std::shared_ptr<TensorImpl> impl_;
};

// Internal constructors used by the op layer.
Tensor make_tensor_raw(std::vector<double> data, Shape shape, DType dtype, bool requires_grad);
void attach_node(Tensor& t, std::shared_ptr<Node> node);

// Row-major strides for a shape.
std::vector<std::int64_t> row_major_strides(const Shape& shape);

// A named parameter: the name is a dotted path such as "dec.up1.w".
struct Parameter {
  std::string name;
  Tensor value;
};

// Deterministically ordered name -> tensor collection.
using ParamSet = std::map<std::string, Tensor>;

}  // namespace ndvad
