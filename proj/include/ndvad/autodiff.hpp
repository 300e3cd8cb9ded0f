#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "ndvad/tensor.hpp"

namespace ndvad {

// One recorded operation. backward maps the output gradient to input
// gradients, expressed in terms of the public ops so that gradients of
// gradients come out of the same machinery.
struct Node {
  const char* op = "";
  std::vector<Tensor> inputs;
  std::weak_ptr<TensorImpl> output;
  std::function<std::vector<Tensor>(const Tensor& grad_out)> backward;
  std::int64_t seq = 0;
};

// Gradients keyed by tensor identity, as returned by backward().
class Gradients {
 public:
  Tensor of(const Tensor& t) const {
    auto it = map_.find(t.impl());
    return it == map_.end() ? Tensor() : it->second;
  }
  bool contains(const Tensor& t) const { return map_.count(t.impl()) > 0; }
  std::size_t size() const { return map_.size(); }
  std::unordered_map<const TensorImpl*, Tensor>& raw() { return map_; }

 private:
  std::unordered_map<const TensorImpl*, Tensor> map_;
};

// Scoped switch that disables recording (forward-only evaluation).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

// Recording context. Ops record whenever grad mode is on and an input
// requires grad; the Tape scopes a training context and carries the
// higher_order policy: with higher_order the gradient computation performed
// by backward() is itself recorded (onto a nested tape), so a second
// backward can differentiate through it.
class Tape {
 public:
  explicit Tape(bool higher_order = false);
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool higher_order() const { return higher_order_; }

  // Reverse-mode sweep from a scalar loss. Each reachable node is visited
  // exactly once; leaf tensors with requires_grad receive their gradient
  // (overwriting any previous one). Returns gradients for every tensor that
  // participated.
  Gradients backward(const Tensor& loss);

  static Tape* current();

 private:
  Tape* prev_;
  bool higher_order_;
};

// Free-function form; create_graph keeps recording on during the sweep.
Gradients backward(const Tensor& loss, bool create_graph = false);

std::int64_t next_node_seq();

// Op-layer helper: wraps freshly computed data into a tensor and, when
// recording applies, attaches a Node holding the backward closure.
Tensor autodiff_result(std::vector<double> data, Shape shape, DType dtype, const char* op,
                       std::vector<Tensor> inputs,
                       std::function<std::vector<Tensor>(const Tensor&)> backward);

}  // namespace ndvad
