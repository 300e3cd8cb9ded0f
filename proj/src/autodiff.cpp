#include "ndvad/autodiff.hpp"

#include <algorithm>
#include <unordered_set>

#include "ndvad/ops.hpp"

namespace ndvad {

namespace {
struct Tls {
  Tape* current = nullptr;
  bool grad_enabled = true;
  std::int64_t seq = 0;
};
Tls& tls() {
  thread_local Tls t;
  return t;
}
}  // namespace

NoGradGuard::NoGradGuard() : prev_(tls().grad_enabled) { tls().grad_enabled = false; }
NoGradGuard::~NoGradGuard() { tls().grad_enabled = prev_; }

bool grad_enabled() { return tls().grad_enabled; }

std::int64_t next_node_seq() { return ++tls().seq; }

Tape::Tape(bool higher_order) : prev_(tls().current), higher_order_(higher_order) {
  tls().current = this;
}

Tape::~Tape() { tls().current = prev_; }

Tape* Tape::current() { return tls().current; }

Gradients Tape::backward(const Tensor& loss) { return ndvad::backward(loss, higher_order_); }

Tensor autodiff_result(std::vector<double> data, Shape shape, DType dtype, const char* op,
                       std::vector<Tensor> inputs,
                       std::function<std::vector<Tensor>(const Tensor&)> backward_fn) {
  bool needs_grad = false;
  if (tls().grad_enabled) {
    for (const auto& in : inputs) {
      if (in.defined() && in.requires_grad()) {
        needs_grad = true;
        break;
      }
    }
  }
  Tensor out = make_tensor_raw(std::move(data), std::move(shape), dtype, needs_grad);
  if (needs_grad) {
    auto node = std::make_shared<Node>();
    node->op = op;
    node->inputs = std::move(inputs);
    node->output = out.impl_ptr();
    node->backward = std::move(backward_fn);
    node->seq = out.impl()->seq;
    attach_node(out, std::move(node));
  }
  return out;
}

Gradients backward(const Tensor& loss, bool create_graph) {
  if (!loss.defined()) throw ContractError("backward: undefined loss tensor");
  if (loss.numel() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  }
  Gradients grads;
  if (!loss.requires_grad() || loss.node() == nullptr) return grads;

  // Collect every node reachable from the loss; creation order (seq) is a
  // valid topological order because inputs always predate their consumers.
  std::vector<std::shared_ptr<Node>> nodes;
  std::unordered_set<const Node*> seen;
  std::vector<std::shared_ptr<Node>> stack{loss.node()};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    nodes.push_back(n);
    for (const auto& in : n->inputs) {
      auto pn = in.node();
      if (pn && seen.insert(pn.get()).second) stack.push_back(pn);
    }
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const auto& a, const auto& b) { return a->seq > b->seq; });

  auto& gmap = grads.raw();
  gmap.emplace(loss.impl(), Tensor::ones(loss.shape(), loss.dtype()));

  auto sweep = [&]() {
    // A nested tape scopes the gradient computation when it is itself being
    // recorded for a later higher-order backward.
    for (const auto& n : nodes) {
      auto out_impl = n->output.lock();
      if (!out_impl) continue;
      auto it = gmap.find(out_impl.get());
      if (it == gmap.end()) continue;
      Tensor gout = it->second;
      std::vector<Tensor> gins = n->backward(gout);
      if (gins.size() != n->inputs.size()) {
        throw ContractError(std::string("backward of op '") + n->op +
                            "' returned wrong gradient count");
      }
      for (std::size_t i = 0; i < gins.size(); ++i) {
        const Tensor& in = n->inputs[i];
        if (!gins[i].defined() || !in.defined() || !in.requires_grad()) continue;
        auto git = gmap.find(in.impl());
        if (git == gmap.end()) {
          gmap.emplace(in.impl(), gins[i]);
        } else {
          git->second = add(git->second, gins[i]);
        }
      }
    }
  };

  if (create_graph) {
    Tape nested(true);
    sweep();
  } else {
    NoGradGuard no_grad;
    sweep();
  }

  for (auto& [impl, g] : gmap) {
    if (impl->requires_grad && impl->node == nullptr) {
      const_cast<TensorImpl*>(impl)->grad = std::make_unique<Tensor>(g);
    }
  }
  return grads;
}

}  // namespace ndvad
