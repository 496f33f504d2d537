#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "g3d/config.hpp"

G3D_NAMESPACE_BEGIN

/// One named, independently optimized block of learnable values together with
/// its Adam moments.
struct ParamGroup {
  std::string name;
  std::vector<Real> value;
  std::vector<Real> grad;
  std::vector<Real> m;
  std::vector<Real> v;
  Real lr = Real(1e-3);
  std::int64_t step = 0;
  std::int64_t skipped_steps = 0;

  std::size_t size() const { return value.size(); }
};

class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  /// Registers a group. Names are unique; registering twice throws.
  ParamGroup& add(const std::string& name, std::vector<Real> initial, Real lr);

  ParamGroup& get(const std::string& name);
  const ParamGroup& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::span<const std::unique_ptr<ParamGroup>> groups() const { return groups_; }
  std::size_t total_size() const;

  void zero_grad();
  /// Drops optimizer moments and step counters for every group.
  void reset_optimizer();

 private:
  std::vector<std::unique_ptr<ParamGroup>> groups_;
};

struct AdamConfig {
  Real beta1 = Real(0.9);
  Real beta2 = Real(0.999);
  Real eps = Real(1e-8);
};

struct AdamReport {
  int groups_stepped = 0;
  int groups_skipped = 0;
};

/// One Adam update on every group with `lr = group.lr * lr_scale`. Groups whose
/// gradient contains a non-finite value are skipped (moments untouched) and
/// their skip counter is incremented.
AdamReport adam_step(ParamStore& store, const AdamConfig& config = {}, Real lr_scale = 1);

/// Same update restricted to one group.
bool adam_step(ParamGroup& group, const AdamConfig& config = {}, Real lr_scale = 1);

G3D_NAMESPACE_END
