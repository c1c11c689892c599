// Copyright 2026 The fusionbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fusionbench/error.hpp"
#include "fusionbench/tensor.hpp"

namespace fusionbench {

/// Named trainable tensors with gradient buffers of matching shape.
class ParamStore {
 public:
  struct Entry {
    Tensor value;
    Tensor grad;
    bool trainable = true;
  };

  Entry& add(const std::string& name, Tensor value, bool trainable = true) {
    if (entries_.count(name)) throw ValidationError("duplicate parameter '" + name + "'");
    Tensor grad(value.shape());
    auto [it, _] = entries_.emplace(name, Entry{std::move(value), std::move(grad), trainable});
    return it->second;
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  Entry& entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ValidationError("unknown parameter '" + name + "'");
    return it->second;
  }
  const Entry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ValidationError("unknown parameter '" + name + "'");
    return it->second;
  }

  Tensor& value(const std::string& name) { return entry(name).value; }
  const Tensor& value(const std::string& name) const { return entry(name).value; }
  Tensor& grad(const std::string& name) { return entry(name).grad; }
  const Tensor& grad(const std::string& name) const { return entry(name).grad; }

  /// Replaces a value; the shape must not change.
  void set(const std::string& name, Tensor value) {
    Entry& e = entry(name);
    if (value.shape() != e.value.shape()) {
      throw DimensionError("parameter '" + name + "' has shape " + shape_str(e.value.shape()) +
                           ", got " + shape_str(value.shape()));
    }
    e.value = std::move(value);
  }

  void zero_grads() {
    for (auto& [_, e] : entries_) e.grad.fill(0.0);
  }

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, e] : entries_) n += e.value.size();
    return n;
  }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    auto it = b.entries_.begin();
    for (const auto& [name, e] : a.entries_) {
      if (it->first != name || it->second.value != e.value ||
          it->second.trainable != e.trainable)
        return false;
      ++it;
    }
    return true;
  }

 private:
  std::map<std::string, Entry> entries_;
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  Shape shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  bool requires_grad() const;
  /// Gradient accumulated by the last backward pass (zeros if untouched).
  Tensor grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recorder. Each primitive appends one node; backward() walks
/// the nodes once in reverse order and flushes parameter gradients into the
/// ParamStore they came from.
class Tape {
 public:
  /// Receives the output gradient; accumulates into input gradients.
  using Backward = std::function<void(Tape&, const Tensor&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) { return push(std::move(value), false, nullptr); }

  /// Differentiable input not owned by a ParamStore.
  Var input(Tensor value) { return push(std::move(value), true, nullptr); }

  /// Leaf bound to a stored parameter; repeated calls return the same node.
  Var param(ParamStore& store, const std::string& name) {
    if (store_ != nullptr && store_ != &store) {
      throw ValidationError("tape already bound to a different ParamStore");
    }
    store_ = &store;
    if (auto it = param_nodes_.find(name); it != param_nodes_.end()) {
      return Var(this, it->second);
    }
    const auto& e = store.entry(name);
    Var v = push(e.value, e.trainable, nullptr);
    param_nodes_.emplace(name, v.id());
    return v;
  }

  /// Records a primitive whose gradient is needed if any input needs one.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
    return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
  }

  Var record(Tensor value, const std::vector<Var>& inputs, Backward backward) {
    if (!value.all_finite()) throw NumericError("non-finite value produced on tape");
    bool needs = false;
    for (const Var& in : inputs) {
      if (in.tape_ != this) throw ValidationError("input recorded on a different tape");
      needs = needs || nodes_[in.id_].requires_grad;
    }
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
  }

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  /// Gradient buffer for a node, allocated on first touch.
  Tensor& grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.grad) n.grad.emplace(n.value.shape());
    return *n.grad;
  }

  void accumulate(const Var& v, const Tensor& g) {
    if (!nodes_[v.id_].requires_grad) return;
    grad_buffer(v.id_) += g;
  }

  Tensor grad(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.grad ? *n.grad : Tensor(n.value.shape());
  }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every node. Parameter
  /// gradients are added to the bound ParamStore. Returns the number of
  /// backward closures executed.
  std::size_t backward(const Var& loss) {
    if (loss.size() != 1) {
      throw DimensionError("backward() needs a scalar loss, got " + shape_str(loss.shape()));
    }
    for (Node& n : nodes_) n.grad.reset();
    grad_buffer(loss.id_).fill(1.0);
    std::size_t visited = 0;
    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || !n.grad) continue;
      Tensor g = *n.grad;
      n.backward(*this, g);
      ++visited;
    }
    if (store_ != nullptr) {
      for (const auto& [name, id] : param_nodes_) {
        const Node& n = nodes_[id];
        if (n.requires_grad && n.grad) store_->grad(name) += *n.grad;
      }
    }
    return visited;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::optional<Tensor> grad;
    Backward backward;
    bool requires_grad = false;
  };

  Var push(Tensor value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), std::nullopt, std::move(backward), requires_grad});
    return Var(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> param_nodes_;
  ParamStore* store_ = nullptr;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }
inline Tensor Var::grad() const { return tape_->grad(id_); }

}  // namespace fusionbench
