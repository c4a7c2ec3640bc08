#include "tonemap/autodiff.hpp"

#include <cmath>

#include "tonemap/errors.hpp"

namespace tonemap {

template <typename T>
ParamId ParameterSet<T>::add(std::string name, Tensor<T> init) {
  if (find(name)) throw ContractError("duplicate parameter name: " + name);
  Tensor<T> grad(init.shape());
  entries_.push_back(Entry{std::move(name), std::move(init), std::move(grad)});
  return static_cast<ParamId>(entries_.size() - 1);
}

template <typename T>
std::optional<ParamId> ParameterSet<T>::find(std::string_view name) const {
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return static_cast<ParamId>(i);
  }
  return std::nullopt;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& e : entries_) e.grad.fill(T(0));
}

template <typename T>
int64_t ParameterSet<T>::count() const {
  int64_t total = 0;
  for (const auto& e : entries_) total += e.value.numel();
  return total;
}

template <typename T>
double ParameterSet<T>::grad_norm() const {
  double sq = 0.0;
  for (const auto& e : entries_) {
    for (T g : e.grad.values()) sq += static_cast<double>(g) * g;
  }
  return std::sqrt(sq);
}

template <typename T>
Var<T> Tape<T>::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var<T>(this, static_cast<int>(nodes_.size() - 1));
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = true;
  return push(std::move(node));
}

template <typename T>
Var<T> Tape<T>::param(ParamId id) {
  if (params_ == nullptr) throw ContractError("tape has no parameter set");
  if (id < 0 || static_cast<size_t>(id) >= params_->size()) {
    throw ContractError("unknown parameter id " + std::to_string(id));
  }
  if (param_nodes_.size() < params_->size()) param_nodes_.resize(params_->size(), -1);
  if (param_nodes_[id] >= 0) return Var<T>(this, param_nodes_[id]);
  Node node;
  node.value = params_->value(id);
  node.requires_grad = true;
  node.param = id;
  Var<T> v = push(std::move(node));
  param_nodes_[id] = v.id();
  return v;
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::vector<Var<T>> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const auto& in : inputs) {
    if (in.valid() && &in.tape() != this) throw ContractError("operand recorded on another tape");
    if (in.valid() && nodes_.at(in.id()).requires_grad) node.requires_grad = true;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

template <typename T>
Tensor<T>& Tape<T>::grad_buffer(int id) {
  Node& node = nodes_.at(id);
  if (node.grad.empty() && node.value.numel() > 0) node.grad = Tensor<T>(node.value.shape());
  return node.grad;
}

template <typename T>
void Tape<T>::accumulate(int id, const Tensor<T>& g) {
  if (!nodes_.at(id).requires_grad) return;
  grad_buffer(id).axpy(T(1), g);
}

template <typename T>
void Tape<T>::backward(const Var<T>& loss) {
  if (!loss.valid() || &loss.tape() != this) throw ContractError("loss not recorded on this tape");
  if (loss.value().numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " + loss.shape().str());
  }
  if (backward_done_) throw ContractError("backward already run; reset the tape first");
  backward_done_ = true;
  grad_buffer(loss.id()).fill(T(1));
  for (int id = loss.id(); id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.requires_grad || node.grad.empty() || !node.backward) continue;
    node.backward(*this, node.grad);
  }
  if (params_ == nullptr) return;
  for (size_t p = 0; p < param_nodes_.size(); ++p) {
    const int id = param_nodes_[p];
    if (id < 0 || nodes_[id].grad.empty()) continue;
    params_->grad(static_cast<ParamId>(p)).axpy(T(1), nodes_[id].grad);
  }
}

template <typename T>
Tensor<T> Tape<T>::grad(const Var<T>& v) const {
  const Node& node = nodes_.at(v.id());
  if (node.grad.empty()) return Tensor<T>(node.value.shape());
  return node.grad;
}

template <typename T>
void Tape<T>::reset() {
  nodes_.clear();
  param_nodes_.clear();
  backward_done_ = false;
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace tonemap
