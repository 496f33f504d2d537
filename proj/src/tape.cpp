#include "g3d/tape.hpp"

#include <algorithm>
#include <atomic>
#include <string>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

namespace {
std::atomic<std::uint32_t> next_tape_id{1};
}

Tape::Tape() : id_(next_tape_id.fetch_add(1)) {}

const Tape::Node& Tape::node(Var v) const {
  require(v.tape == id_ && v.index < nodes_.size(), ErrorCode::kNotOnTape, "value is not recorded on this tape");
  return nodes_[v.index];
}

Tape::Node& Tape::node(Var v) {
  return const_cast<Node&>(static_cast<const Tape*>(this)->node(v));
}

Var Tape::constant(std::vector<Real> values) {
  Node n;
  n.value = std::move(values);
  nodes_.push_back(std::move(n));
  return {id_, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::parameter(ParamGroup& group) {
  if (auto it = params_.find(&group); it != params_.end()) return {id_, it->second};
  Node n;
  n.param = &group;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  const auto index = static_cast<std::uint32_t>(nodes_.size() - 1);
  params_.emplace(&group, index);
  return {id_, index};
}

Var Tape::record(std::vector<Real> values, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(values), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(std::vector<Real> values, const std::vector<Var>& inputs, Backward backward) {
  bool needs = false;
  for (Var in : inputs) needs = needs || node(in).needs_grad;
  Node n;
  n.value = std::move(values);
  n.needs_grad = needs;
  if (needs) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {id_, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

std::span<const Real> Tape::value(Var v) const {
  const Node& n = node(v);
  if (n.param) return n.param->value;
  return n.value;
}

bool Tape::requires_grad(Var v) const { return node(v).needs_grad; }

std::span<Real> Tape::grad(Var v) {
  Node& n = node(v);
  if (n.param) return n.param->grad;
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), Real(0));
  return n.grad;
}

std::span<const Real> Tape::gradient(Var v) const {
  const Node& n = node(v);
  require(has_run_, ErrorCode::kNotOnTape, "backward() has not been run on this tape");
  require(n.needs_grad, ErrorCode::kNotOnTape, "requested gradient of a value that does not depend on parameters");
  if (n.param) return n.param->grad;
  return n.grad;
}

void Tape::backward(Var loss) {
  Node& root = node(loss);
  require(value(loss).size() == 1, ErrorCode::kShapeMismatch, "backward() needs a scalar loss");
  for (Node& n : nodes_) {
    if (!n.needs_grad) continue;
    if (n.param) std::fill(n.param->grad.begin(), n.param->grad.end(), Real(0));
    else n.grad.assign(n.value.size(), Real(0));
  }
  has_run_ = true;
  if (!root.needs_grad) return;
  grad(loss)[0] = 1;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (i > loss.index || !n.needs_grad || !n.backward) continue;
    n.backward(*this, Var{id_, static_cast<std::uint32_t>(i)});
  }
}

G3D_NAMESPACE_END
