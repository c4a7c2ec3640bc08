#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tonemap/tensor.hpp"

namespace tonemap {

template <typename T>
class Tape;

using ParamId = int;

// Named trainable tensors and their accumulated gradients.
template <typename T>
class ParameterSet {
 public:
  ParamId add(std::string name, Tensor<T> init);

  size_t size() const { return entries_.size(); }
  const std::string& name(ParamId id) const { return entries_.at(id).name; }
  Tensor<T>& value(ParamId id) { return entries_.at(id).value; }
  const Tensor<T>& value(ParamId id) const { return entries_.at(id).value; }
  Tensor<T>& grad(ParamId id) { return entries_.at(id).grad; }
  const Tensor<T>& grad(ParamId id) const { return entries_.at(id).grad; }

  std::optional<ParamId> find(std::string_view name) const;
  void zero_grad();
  // Total number of trainable scalars.
  int64_t count() const;
  double grad_norm() const;

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>());
    return out;
  }

 private:
  struct Entry {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
  };
  std::vector<Entry> entries_;
};

// Handle to a node recorded on a Tape.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  int id() const { return id_; }
  Tape<T>& tape() const { return *tape_; }
  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Tape<T>* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode recording. Nodes are appended in evaluation order, so the
// node list is already topologically sorted; backward walks it in reverse.
template <typename T>
class Tape {
 public:
  // Receives the gradient of the loss w.r.t. the node's output and must
  // accumulate into its inputs through accumulate()/grad_buffer().
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& grad_out)>;

  explicit Tape(ParameterSet<T>* params = nullptr) : params_(params) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value);
  // Non-parameter leaf whose gradient can be read back with grad().
  Var<T> leaf(Tensor<T> value);
  // Leaf bound to a registered parameter; repeated calls share one node.
  Var<T> param(ParamId id);

  Var<T> record(Tensor<T> value, std::vector<Var<T>> inputs, BackwardFn backward);

  const Tensor<T>& value(int id) const { return nodes_.at(id).value; }
  bool requires_grad(const Var<T>& v) const { return nodes_.at(v.id()).requires_grad; }
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }

  // Gradient accumulator of node `id`, zero-filled on first access.
  Tensor<T>& grad_buffer(int id);
  void accumulate(int id, const Tensor<T>& g);

  // Seeds d(loss)/d(loss) = 1 and propagates. Parameter gradients are added
  // into the ParameterSet (callers zero them between steps).
  void backward(const Var<T>& loss);

  // Gradient of a node after backward(); zeros when the node was unreachable.
  Tensor<T> grad(const Var<T>& v) const;

  void reset();
  size_t size() const { return nodes_.size(); }
  ParameterSet<T>* parameters() const { return params_; }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    BackwardFn backward;
    bool requires_grad = false;
    ParamId param = -1;
  };

  Var<T> push(Node node);

  ParameterSet<T>* params_;
  std::deque<Node> nodes_;
  std::vector<int> param_nodes_;
  bool backward_done_ = false;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return tape_->value(id_);
}

}  // namespace tonemap
