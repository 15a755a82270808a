#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "casper/features.hpp"

namespace casper {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

// One relational role bound to its filler, e.g. above+red+X. Non-relational
// items carry a single role named "item".
struct RoleBoundVector {
  std::string role;
  FeatureVector vector;

  friend bool operator==(const RoleBoundVector&, const RoleBoundVector&) = default;
};

enum class ItemState { Active, RejectedParallel, RejectedSerial, Accepted };

struct SearchItem {
  std::vector<RoleBoundVector> roles;  // sorted by role name
  Point position;
  double priority = 1.0;
  ItemState state = ItemState::Active;
  bool is_target = false;
};

struct TargetTemplate {
  std::vector<RoleBoundVector> roles;  // sorted by role name
  SalienceMap salience;                // over the stripped layout
};

inline const FeatureLayout& layout_of(const std::vector<RoleBoundVector>& roles) {
  if (roles.empty()) throw Error("item has no role-bound vectors");
  return roles.front().vector.layout();
}

/// Role-blind view used by the parallel process: role tags are dropped and the
/// filler vectors are summed element-wise, clamped to {-1, 0, +1}.
inline FeatureVector superimpose_roles(const std::vector<RoleBoundVector>& roles) {
  const FeatureLayout full = layout_of(roles);
  const FeatureLayout stripped = full.stripped();
  const std::size_t skip = full.role_width;
  std::vector<int> sum(stripped.size(), 0);
  for (const auto& rb : roles) {
    require_same_layout(rb.vector.layout(), full);
    for (std::size_t k = 0; k < stripped.size(); ++k) sum[k] += rb.vector[skip + k];
  }
  std::vector<Trit> clamped(stripped.size());
  for (std::size_t k = 0; k < sum.size(); ++k) {
    clamped[k] = static_cast<Trit>(sum[k] > 0 ? 1 : sum[k] < 0 ? -1 : 0);
  }
  return FeatureVector(stripped, std::move(clamped));
}

inline FeatureVector superimpose_roles(const SearchItem& item) { return superimpose_roles(item.roles); }
inline FeatureVector superimpose_roles(const TargetTemplate& t) { return superimpose_roles(t.roles); }

/// Role-blind view that keeps every filler's value: for each stripped
/// dimension, the multiset of values across roles (stored sorted). Swapping
/// fillers between roles leaves it unchanged; opposing values do not cancel.
class PooledFeatures {
 public:
  explicit PooledFeatures(const std::vector<RoleBoundVector>& roles)
      : layout_(layout_of(roles).stripped()), roles_(roles.size()) {
    const FeatureLayout full = layout_of(roles);
    const std::size_t skip = full.role_width;
    values_.resize(layout_.size() * roles_);
    for (std::size_t k = 0; k < layout_.size(); ++k) {
      Trit* slot = values_.data() + k * roles_;
      for (std::size_t j = 0; j < roles_; ++j) {
        require_same_layout(roles[j].vector.layout(), full);
        slot[j] = roles[j].vector[skip + k];
      }
      std::sort(slot, slot + roles_);
    }
  }

  const FeatureLayout& layout() const noexcept { return layout_; }
  std::size_t size() const noexcept { return layout_.size(); }
  std::size_t role_count() const noexcept { return roles_; }

  std::span<const Trit> at(std::size_t k) const { return {values_.data() + k * roles_, roles_}; }

  bool present(std::size_t k) const {
    for (Trit v : at(k)) {
      if (v != 0) return true;
    }
    return false;
  }

  bool same_at(std::size_t k, const PooledFeatures& other) const {
    auto a = at(k);
    auto b = other.at(k);
    return std::equal(a.begin(), a.end(), b.begin(), b.end());
  }

  friend bool operator==(const PooledFeatures&, const PooledFeatures&) = default;

 private:
  FeatureLayout layout_;
  std::size_t roles_;
  std::vector<Trit> values_;
};

inline PooledFeatures pool_roles(const SearchItem& item) { return PooledFeatures(item.roles); }
inline PooledFeatures pool_roles(const TargetTemplate& t) { return PooledFeatures(t.roles); }

}  // namespace casper
