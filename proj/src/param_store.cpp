#include "g3d/param_store.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

ParamGroup& ParamStore::add(const std::string& name, std::vector<Real> initial, Real lr) {
  require(!contains(name), ErrorCode::kInvalidArgument, "parameter group registered twice: " + name);
  auto g = std::make_unique<ParamGroup>();
  g->name = name;
  g->value = std::move(initial);
  g->grad.assign(g->value.size(), 0);
  g->m.assign(g->value.size(), 0);
  g->v.assign(g->value.size(), 0);
  g->lr = lr;
  groups_.push_back(std::move(g));
  return *groups_.back();
}

ParamGroup& ParamStore::get(const std::string& name) {
  for (auto& g : groups_)
    if (g->name == name) return *g;
  fail(ErrorCode::kInvalidArgument, "unknown parameter group: " + name);
}

const ParamGroup& ParamStore::get(const std::string& name) const {
  return const_cast<ParamStore*>(this)->get(name);
}

bool ParamStore::contains(const std::string& name) const {
  return std::any_of(groups_.begin(), groups_.end(), [&](const auto& g) { return g->name == name; });
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& g : groups_) n += g->size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& g : groups_) std::fill(g->grad.begin(), g->grad.end(), Real(0));
}

void ParamStore::reset_optimizer() {
  for (auto& g : groups_) {
    std::fill(g->m.begin(), g->m.end(), Real(0));
    std::fill(g->v.begin(), g->v.end(), Real(0));
    g->step = 0;
  }
}

bool adam_step(ParamGroup& g, const AdamConfig& config, Real lr_scale) {
  for (Real x : g.grad)
    if (!std::isfinite(x)) {
      ++g.skipped_steps;
      std::cerr << "[adam] non-finite gradient in group '" << g.name << "', step skipped (" << g.skipped_steps
                << " total)\n";
      return false;
    }
  ++g.step;
  const Real b1 = config.beta1, b2 = config.beta2;
  const Real c1 = Real(1) - static_cast<Real>(std::pow(static_cast<double>(b1), static_cast<double>(g.step)));
  const Real c2 = Real(1) - static_cast<Real>(std::pow(static_cast<double>(b2), static_cast<double>(g.step)));
  const Real lr = g.lr * lr_scale;
  const Real sqrt_c2 = std::sqrt(c2);
  const std::size_t n = g.value.size();
  Real* __restrict p = g.value.data();
  Real* __restrict m = g.m.data();
  Real* __restrict v = g.v.data();
  const Real* __restrict grad = g.grad.data();
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1 - b1) * grad[i];
    v[i] = b2 * v[i] + (1 - b2) * grad[i] * grad[i];
    const Real m_hat = m[i] / c1;
    const Real v_hat_sqrt = std::sqrt(v[i]) / sqrt_c2;
    p[i] -= lr * m_hat / (v_hat_sqrt + config.eps);
  }
  return true;
}

AdamReport adam_step(ParamStore& store, const AdamConfig& config, Real lr_scale) {
  AdamReport report;
  for (const auto& g : store.groups()) {
    if (adam_step(*g, config, lr_scale)) ++report.groups_stepped;
    else ++report.groups_skipped;
  }
  return report;
}

G3D_NAMESPACE_END
