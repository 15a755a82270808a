#pragma once

// Display construction: role-bound items, radial geometry, higher-order and
// emergent feature units.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "casper/classification.hpp"
#include "casper/experiment_spec.hpp"
#include "casper/features.hpp"
#include "casper/items.hpp"
#include "casper/rng.hpp"

namespace casper {

inline constexpr std::string_view kPlainRole = "item";

struct Relation {
  std::string_view name;
  std::string_view first_role;   // bound to the first filler
  std::string_view second_role;  // bound to the second filler
};

// above(x, y) reads "x above y".
inline constexpr std::array<Relation, 4> kRelations{{
    {"above", "above", "below"},
    {"below", "below", "above"},
    {"left-of", "left", "right"},
    {"right-of", "right", "left"},
}};

inline const Relation& find_relation(std::string_view name) {
  for (const auto& r : kRelations) {
    if (detail::name_equals(name, r.name)) return r;
  }
  throw UnknownName("relation", std::string(name));
}

/// Role names bound by an item expression, in filler order.
inline std::vector<std::string> roles_of(const ItemExpr& expr) {
  if (!expr.relational()) {
    if (expr.fillers.size() != 1) throw Error("a plain item takes exactly one color and shape");
    return {std::string(kPlainRole)};
  }
  const Relation& rel = find_relation(expr.relation);
  if (expr.fillers.size() != 2) {
    throw Error("relation '" + std::string(rel.name) + "' takes 2 fillers, got " +
                std::to_string(expr.fillers.size()));
  }
  return {std::string(rel.first_role), std::string(rel.second_role)};
}

/// Sorted distinct roles across the target and distractors of a condition;
/// position in this table is the role's one-hot tag index.
inline std::vector<std::string> role_table(const ConditionSpec& condition) {
  std::vector<std::string> roles = roles_of(condition.target);
  for (const auto& d : condition.distractors) {
    auto r = roles_of(d);
    roles.insert(roles.end(), r.begin(), r.end());
  }
  std::sort(roles.begin(), roles.end());
  roles.erase(std::unique(roles.begin(), roles.end()), roles.end());
  return roles;
}

inline std::size_t higher_order_units(const ConditionSpec& condition) {
  std::size_t n = 0;
  for (const auto& h : condition.higher_order) {
    if (h.n == 0) throw Error("higher-order width must be positive");
    if (n != 0 && n != h.n) throw Error("condition '" + condition.name + "' mixes higher-order widths");
    n = h.n;
  }
  return n;
}

inline FeatureLayout condition_layout(const ConditionSpec& condition) {
  FeatureLayout layout;
  layout.role_width = role_table(condition).size();
  layout.higher_order_width = 2 * higher_order_units(condition);
  layout.emergent_width = condition.emergent ? 2 : 0;
  return layout;
}

/// Builds the role-bound vectors of one item: per role, a one-hot role tag
/// followed by the filler's color and shape. Roles come back sorted by name.
inline std::vector<RoleBoundVector> make_role_vectors(const ItemExpr& expr, const FeatureLayout& layout,
                                                      const std::vector<std::string>& roles) {
  const std::vector<std::string> bound = roles_of(expr);
  if (layout.role_width != roles.size()) throw LayoutMismatch("role table does not match layout");
  std::vector<RoleBoundVector> out;
  for (std::size_t i = 0; i < bound.size(); ++i) {
    auto it = std::find(roles.begin(), roles.end(), bound[i]);
    if (it == roles.end()) throw LayoutMismatch("role '" + bound[i] + "' is missing from the role table");
    for (const auto& existing : out) {
      if (existing.role == bound[i]) throw Error("role '" + bound[i] + "' bound twice");
    }
    FeatureVector v(layout);
    v.set(layout.offset(Segment::RoleTag) + static_cast<std::size_t>(it - roles.begin()), 1);
    v.assign_segment(Segment::Color, color_units(expr.fillers[i].color));
    v.assign_segment(Segment::Shape, shape_units(expr.fillers[i].shape));
    out.push_back({bound[i], std::move(v)});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.role < b.role; });
  return out;
}

inline SearchItem make_item(const ItemExpr& expr, const FeatureLayout& layout,
                            const std::vector<std::string>& roles, Point position) {
  SearchItem item;
  item.roles = make_role_vectors(expr, layout, roles);
  item.position = position;
  return item;
}

// ---------------------------------------------------------------------------
// Geometry

struct RingGeometry {
  double radius = 1.0;        // outermost ring, in visual-field radii
  std::size_t capacity = 12;  // items per ring before another ring is added
};

struct DisplayLayout {
  std::vector<Point> positions;
  std::vector<double> ring_radii;
};

/// Places `set_size` items at equal angular spacing on concentric rings around
/// fixation at the origin. One ring of radius `geometry.radius` holds up to
/// `capacity` items; larger displays use ceil(n / capacity) rings with radii
/// radius * (j + 1) / rings, outer rings taking any remainder. Each ring gets
/// an independent random rotation.
inline DisplayLayout layout_radial(std::size_t set_size, Rng& rng, RingGeometry geometry = {}) {
  if (set_size < 1) throw Error("set size must be at least 1");
  DisplayLayout out;
  const std::size_t rings = (set_size + geometry.capacity - 1) / geometry.capacity;
  const std::size_t base = set_size / rings;
  const std::size_t extra = set_size % rings;
  for (std::size_t j = 0; j < rings; ++j) {
    const double r = geometry.radius * static_cast<double>(j + 1) / static_cast<double>(rings);
    const std::size_t count = base + (j >= rings - extra ? 1 : 0);
    const double rotation = rng.uniform(0.0, 2.0 * std::numbers::pi);
    out.ring_radii.push_back(r);
    for (std::size_t i = 0; i < count; ++i) {
      const double angle = rotation + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
      out.positions.push_back({r * std::cos(angle), r * std::sin(angle)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Extra feature segments

/// Arrow: n zeros then n ones. Triangle: n ones then n zeros.
inline std::vector<Trit> higher_order_units(HigherOrderKind kind, std::size_t n) {
  std::vector<Trit> units(2 * n, 0);
  const std::size_t start = kind == HigherOrderKind::Arrow ? n : 0;
  std::fill(units.begin() + static_cast<std::ptrdiff_t>(start),
            units.begin() + static_cast<std::ptrdiff_t>(start + n), Trit{1});
  return units;
}

// The item-level segments live on the first role vector; other roles keep
// zeros there, so superposition sees them exactly once.
inline void attach_higher_order(std::vector<RoleBoundVector>& roles, HigherOrderKind kind, std::size_t n) {
  if (roles.empty()) throw Error("item has no role-bound vectors");
  roles.front().vector.assign_segment(Segment::HigherOrder, higher_order_units(kind, n));
}

inline void attach_higher_order(std::vector<SearchItem>& items, HigherOrderKind kind, std::size_t n) {
  for (auto& item : items) attach_higher_order(item.roles, kind, n);
}

namespace detail {

inline bool same_configuration(const std::vector<RoleBoundVector>& a, const std::vector<RoleBoundVector>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].role != b[i].role) return false;
    auto sa = a[i].vector.segment(Segment::Shape);
    auto sb = b[i].vector.segment(Segment::Shape);
    if (!std::equal(sa.begin(), sa.end(), sb.begin())) return false;
  }
  return true;
}

}  // namespace detail

/// Adds the two-unit emergent segment: {1,0} for items whose configuration
/// produces the target's emergent feature, {0,1} otherwise, and sets the
/// salience of both units to `eta`.
///
/// An item shares the target's emergent feature when it is the target or when
/// it is relational and puts the same shapes in the same roles as the
/// template (only colors differ). Role-swapped items get the distractor unit.
inline void attach_emergent(std::vector<SearchItem>& items, TargetTemplate& tmpl, double eta) {
  const FeatureLayout& layout = layout_of(tmpl.roles);
  if (layout.emergent_width != 2) throw Error("emergent segment is not declared in the layout");
  static constexpr std::array<Trit, 2> kTargetUnit{1, 0};
  static constexpr std::array<Trit, 2> kDistractorUnit{0, 1};
  tmpl.roles.front().vector.assign_segment(Segment::Emergent, kTargetUnit);
  for (auto& item : items) {
    const bool shares = item.is_target || (item.roles.size() > 1 && detail::same_configuration(item.roles, tmpl.roles));
    item.roles.front().vector.assign_segment(Segment::Emergent, shares ? kTargetUnit : kDistractorUnit);
  }
  tmpl.salience.set_segment(layout.stripped(), Segment::Emergent, eta);
}

// ---------------------------------------------------------------------------
// Salience overrides

inline void apply_salience(SalienceMap& salience, const FeatureLayout& stripped, const SalienceOverride& o) {
  for (Segment s : kAllSegments) {
    if (s != Segment::RoleTag && segment_name(s) == o.key) {
      salience.set_segment(stripped, s, o.value);
      return;
    }
  }
  std::size_t index = 0;
  auto [ptr, ec] = std::from_chars(o.key.data(), o.key.data() + o.key.size(), index);
  if (ec == std::errc() && ptr == o.key.data() + o.key.size()) {
    if (index >= stripped.size()) throw Error("salience dimension " + o.key + " out of range");
    salience.set(index, o.value);
    return;
  }
  for (std::size_t k = 0; k < stripped.size(); ++k) {
    if (stripped.label(k) == o.key) {
      salience.set(k, o.value);
      return;
    }
  }
  throw UnknownName("salience segment or dimension", o.key);
}

// ---------------------------------------------------------------------------
// Whole displays

struct Display {
  TargetTemplate target;
  std::vector<SearchItem> items;
  Point fixation{};
  bool target_present = true;
};

inline TargetTemplate make_template(const ConditionSpec& condition) {
  const FeatureLayout layout = condition_layout(condition);
  const auto roles = role_table(condition);
  TargetTemplate t;
  t.roles = make_role_vectors(condition.target, layout, roles);
  t.salience = SalienceMap(layout.stripped().size());
  for (const auto& o : condition.salience) apply_salience(t.salience, layout.stripped(), o);
  return t;
}

/// Generates one display for a condition. Draws from `rng` in a fixed order:
/// ring rotations, then the target slot. Distractor types are assigned to the
/// remaining slots round-robin in slot order.
///
/// Target-absent displays are supported but the model is only tuned for
/// target-present search.
inline Display build_display(const ConditionSpec& condition, std::size_t set_size, Rng& rng,
                             bool target_present = true, RingGeometry geometry = {}) {
  if (condition.distractors.empty() && (set_size > 1 || !target_present)) {
    throw Error("condition '" + condition.name + "' has no distractor types");
  }
  const FeatureLayout layout = condition_layout(condition);
  const auto roles = role_table(condition);
  const std::size_t ho_units = higher_order_units(condition);

  Display display;
  display.target = make_template(condition);
  display.target_present = target_present;

  const DisplayLayout geo = layout_radial(set_size, rng, geometry);
  const std::size_t target_slot = target_present ? rng.index(set_size) : set_size;

  auto higher_order_for = [&](bool is_target) -> const HigherOrderSpec* {
    const HigherOrderSpec* chosen = nullptr;
    for (const auto& h : condition.higher_order) {
      if (h.scope == ItemScope::All || (h.scope == ItemScope::Target) == is_target) chosen = &h;
    }
    return chosen;
  };

  std::size_t distractor_index = 0;
  for (std::size_t slot = 0; slot < set_size; ++slot) {
    const bool is_target = slot == target_slot;
    const ItemExpr& expr =
        is_target ? condition.target : condition.distractors[distractor_index++ % condition.distractors.size()];
    SearchItem item = make_item(expr, layout, roles, geo.positions[slot]);
    item.is_target = is_target;
    if (const HigherOrderSpec* h = higher_order_for(is_target)) attach_higher_order(item.roles, h->kind, ho_units);
    display.items.push_back(std::move(item));
  }
  if (const HigherOrderSpec* h = higher_order_for(true)) attach_higher_order(display.target.roles, h->kind, ho_units);
  if (condition.emergent) attach_emergent(display.items, display.target, *condition.emergent);
  return display;
}

}  // namespace casper
