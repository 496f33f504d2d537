#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "g3d/param_store.hpp"
#include "g3d/tape.hpp"

G3D_NAMESPACE_BEGIN

enum class Activation { kLinear, kRelu };

/// Fully connected stack. Hidden layers use ReLU, the output layer is linear.
/// Layer l has weights of shape widths[l] x widths[l+1] (row-major) and a bias.
class Mlp {
 public:
  Mlp() = default;
  /// Registers "<name>.l<i>.w" and "<name>.l<i>.b" in the store. Weights and
  /// biases start uniform in +-1/sqrt(fan_in); `zero_output_layer` zeroes the
  /// last layer instead.
  Mlp(ParamStore& store, const std::string& name, std::vector<int> widths, Real lr, std::uint64_t seed,
      bool zero_output_layer = false);

  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int layer_count() const { return static_cast<int>(weights_.size()); }
  Activation activation(int layer) const { return layer + 1 < layer_count() ? Activation::kRelu : Activation::kLinear; }

  ParamGroup& weight(int layer) const { return *weights_[layer]; }
  ParamGroup& bias(int layer) const { return *biases_[layer]; }

  /// Plain evaluation of one input vector.
  std::vector<Real> eval(std::span<const Real> x) const;

  /// Tape op over a batch (n x in) -> (n x out).
  Var forward(Tape& tape, Var x) const;

  /// Tape op propagating three tangent blocks alongside the values. Input and
  /// output layouts are four stacked n x width blocks: value, d/dx, d/dy, d/dz.
  Var forward_jvp(Tape& tape, Var x4) const;

 private:
  std::vector<int> widths_;
  std::vector<ParamGroup*> weights_;
  std::vector<ParamGroup*> biases_;
};

G3D_NAMESPACE_END
