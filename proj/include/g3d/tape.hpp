#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "g3d/param_store.hpp"

G3D_NAMESPACE_BEGIN

class Tape;

/// Handle to a flat real-valued buffer recorded on a Tape.
struct Var {
  std::uint32_t tape = 0;
  std::uint32_t index = 0;

  bool valid() const { return tape != 0; }
};

/// Reverse-mode differentiation tape.
///
/// Nodes are coarse: each recorded operation owns a whole output buffer and a
/// closure that maps the output gradient to input gradients. Parameter leaves
/// alias ParamGroup storage, and their gradients are written to
/// ParamGroup::grad. Constants and values that depend only on constants do not
/// take part in backpropagation.
class Tape {
 public:
  using Backward = std::function<void(Tape&, Var out)>;

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(std::vector<Real> values);
  /// Binds a parameter group. Binding the same group twice returns the same Var.
  Var parameter(ParamGroup& group);

  /// Records an operation. The closure runs only if some input requires grad.
  Var record(std::vector<Real> values, std::initializer_list<Var> inputs, Backward backward);
  Var record(std::vector<Real> values, const std::vector<Var>& inputs, Backward backward);

  std::span<const Real> value(Var v) const;
  std::size_t size(Var v) const { return value(v).size(); }
  bool requires_grad(Var v) const;

  /// Mutable gradient buffer; valid inside backward closures and afterwards.
  std::span<Real> grad(Var v);
  /// Gradient after backward(). Throws kNotOnTape for foreign or unknown Vars.
  std::span<const Real> gradient(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and propagates. Gradients are recomputed from
  /// zero on every call, so repeated calls give identical results.
  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<Real> value;
    std::vector<Real> grad;
    ParamGroup* param = nullptr;
    bool needs_grad = false;
    Backward backward;
  };

  const Node& node(Var v) const;
  Node& node(Var v);

  std::uint32_t id_;
  std::vector<Node> nodes_;
  std::unordered_map<const ParamGroup*, std::uint32_t> params_;
  bool has_run_ = false;
};

G3D_NAMESPACE_END
