#pragma once

// Display-wide classification of feature dimensions into relevant, irrelevant
// and absent, plus the overlap diagnostics used to compare stimulus sets.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "casper/features.hpp"
#include "casper/items.hpp"

namespace casper {

enum class FeatureClass : std::uint8_t { Relevant, Irrelevant, Absent };

struct FeatureClassification {
  std::vector<FeatureClass> classes;  // one per stripped dimension

  std::size_t size() const noexcept { return classes.size(); }
  FeatureClass operator[](std::size_t k) const noexcept { return classes[k]; }

  std::size_t count(FeatureClass c) const noexcept {
    std::size_t n = 0;
    for (FeatureClass x : classes) n += (x == c);
    return n;
  }

  // Sum of salience over relevant dimensions (the match denominator).
  double relevant_salience(const SalienceMap& salience) const {
    if (salience.size() != classes.size()) throw LayoutMismatch("salience map does not match classification");
    double total = 0.0;
    for (std::size_t k = 0; k < classes.size(); ++k) {
      if (classes[k] == FeatureClass::Relevant) total += salience[k];
    }
    return total;
  }

  friend bool operator==(const FeatureClassification&, const FeatureClassification&) = default;
};

namespace detail {

inline const RoleBoundVector* find_role(const std::vector<RoleBoundVector>& roles, const std::string& name) {
  for (const auto& rb : roles) {
    if (rb.role == name) return &rb;
  }
  return nullptr;
}

}  // namespace detail

/// Classifies every dimension of the stripped layout once per display.
///
/// A dimension is absent when it is zero in every role of the template and of
/// every item. It is relevant when the role-pooled template and at least one
/// role-pooled item disagree on it, and irrelevant otherwise. When pooling
/// hides every difference (fillers only swapped between roles), relevance
/// falls back to a role-by-role comparison so the match stays defined; the
/// match itself remains role-blind either way.
inline FeatureClassification classify_features(const TargetTemplate& tmpl,
                                               std::span<const SearchItem> display) {
  const FeatureLayout full = layout_of(tmpl.roles);
  const std::size_t skip = full.role_width;
  const std::size_t dims = full.stripped().size();
  const PooledFeatures pooled_tmpl(tmpl.roles);

  std::vector<bool> pooled_relevant(dims, false);
  std::vector<bool> bound_relevant(dims, false);
  std::vector<bool> nonzero(dims, false);

  for (std::size_t k = 0; k < dims; ++k) nonzero[k] = pooled_tmpl.present(k);
  for (const auto& item : display) {
    if (item.roles.size() != tmpl.roles.size()) {
      throw LayoutMismatch("item and template have different role counts");
    }
    for (const auto& rb : item.roles) {
      require_same_layout(rb.vector.layout(), full);
      const RoleBoundVector* match = detail::find_role(tmpl.roles, rb.role);
      if (match == nullptr) throw LayoutMismatch("item role '" + rb.role + "' is not in the template");
      for (std::size_t k = 0; k < dims; ++k) {
        const Trit v = rb.vector[skip + k];
        nonzero[k] = nonzero[k] || v != 0;
        bound_relevant[k] = bound_relevant[k] || v != match->vector[skip + k];
      }
    }
    const PooledFeatures pooled(item.roles);
    for (std::size_t k = 0; k < dims; ++k) {
      pooled_relevant[k] = pooled_relevant[k] || !pooled.same_at(k, pooled_tmpl);
    }
  }

  const bool any_pooled = std::find(pooled_relevant.begin(), pooled_relevant.end(), true) != pooled_relevant.end();
  const std::vector<bool>& relevant = any_pooled ? pooled_relevant : bound_relevant;

  FeatureClassification out;
  out.classes.resize(dims);
  for (std::size_t k = 0; k < dims; ++k) {
    out.classes[k] = relevant[k]  ? FeatureClass::Relevant
                     : nonzero[k] ? FeatureClass::Irrelevant
                                  : FeatureClass::Absent;
  }
  return out;
}

struct SegmentOverlap {
  std::size_t shared = 0;     // equal and not both zero
  std::size_t differing = 0;  // unequal
};

struct OverlapCounts {
  SegmentOverlap color;
  SegmentOverlap shape;
  SegmentOverlap higher_order;
  SegmentOverlap emergent;
};

/// Shared / differing dimension counts between two role-superimposed vectors,
/// split by segment. Double-zero dimensions are counted in neither.
inline OverlapCounts count_overlap(const FeatureVector& a, const FeatureVector& b) {
  require_same_layout(a.layout(), b.layout());
  OverlapCounts out;
  auto tally = [&](Segment s, SegmentOverlap& dst) {
    auto sa = a.segment(s);
    auto sb = b.segment(s);
    for (std::size_t k = 0; k < sa.size(); ++k) {
      if (sa[k] != sb[k]) {
        ++dst.differing;
      } else if (sa[k] != 0) {
        ++dst.shared;
      }
    }
  };
  tally(Segment::Color, out.color);
  tally(Segment::Shape, out.shape);
  tally(Segment::HigherOrder, out.higher_order);
  tally(Segment::Emergent, out.emergent);
  return out;
}

inline OverlapCounts count_overlap(const TargetTemplate& tmpl, const SearchItem& item) {
  return count_overlap(superimpose_roles(tmpl), superimpose_roles(item));
}

}  // namespace casper
