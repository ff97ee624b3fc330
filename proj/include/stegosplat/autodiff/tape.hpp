#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "stegosplat/autodiff/tensor.hpp"

namespace stegosplat::autodiff {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
  friend bool operator==(Var, Var) = default;
};

template <class T>
class Gradients {
 public:
  explicit Gradients(std::vector<std::optional<BasicTensor<T>>> grads) : grads_(std::move(grads)) {}

  /// nullptr when `v` does not require grad or received no gradient.
  const BasicTensor<T>* find(Var v) const {
    if (v.id >= grads_.size() || !grads_[v.id]) return nullptr;
    return &*grads_[v.id];
  }

  const BasicTensor<T>& at(Var v) const {
    const auto* g = find(v);
    if (g == nullptr) throw std::out_of_range("no gradient recorded for variable");
    return *g;
  }

 private:
  std::vector<std::optional<BasicTensor<T>>> grads_;
};

/// Records operations in execution order; backward replays them in exact
/// reverse. A tape supports a single backward pass.
template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(const BasicTensor<T>& out, const BasicTensor<T>& grad_out,
                                        std::vector<BasicTensor<T>*>& grad_in)>;

  Tape() = default;
  // Recorded closures refer back to the tape, so it must stay put.
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(BasicTensor<T> value, bool requires_grad = false);

  /// Appends the result of an operation. `backward` receives the output
  /// value, its cotangent and one accumulator per input (nullptr for inputs
  /// that do not require grad).
  Var record(BasicTensor<T> value, std::vector<Var> inputs, BackwardFn backward);

  const BasicTensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  /// Gradients of a scalar `loss` with respect to every requires_grad leaf
  /// reached from it. Consumes the tape.
  Gradients<T> backward(Var loss);

 private:
  struct Node {
    BasicTensor<T> value;
    std::vector<Var> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_leaf = false;
  };
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace stegosplat::autodiff
