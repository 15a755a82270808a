#pragma once

// Trinary feature space: segment layout, canonical color/shape encodings and
// per-dimension salience.
//
// Dimension order inside a vector is fixed:
//   role tag | color (18) | shape (27) | higher-order | emergent
// Color units follow the white/black, red/green, blue/yellow channel order
// (6 units each). Shape units are the orientation bank in steps of pi/8
// (widths 3,2,2,2,3,2,2,2), then 4 L-vertex, 4 T-junction and 1 X-junction
// units. Every exported table and serialized vector uses this order.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "casper/error.hpp"

namespace casper {

using Trit = std::int8_t;

enum class Segment : std::uint8_t { RoleTag, Color, Shape, HigherOrder, Emergent };

inline constexpr std::array<Segment, 5> kAllSegments{Segment::RoleTag, Segment::Color,
                                                     Segment::Shape, Segment::HigherOrder,
                                                     Segment::Emergent};

inline std::string_view segment_name(Segment s) noexcept {
  switch (s) {
    case Segment::RoleTag: return "role";
    case Segment::Color: return "color";
    case Segment::Shape: return "shape";
    case Segment::HigherOrder: return "higher_order";
    case Segment::Emergent: return "emergent";
  }
  return "?";
}

inline Segment parse_segment(std::string_view name) {
  for (Segment s : kAllSegments) {
    if (segment_name(s) == name) return s;
  }
  throw UnknownName("segment", std::string(name));
}

struct FeatureLayout {
  static constexpr std::size_t kColorWidth = 18;
  static constexpr std::size_t kShapeWidth = 27;

  std::size_t role_width = 0;
  std::size_t higher_order_width = 0;
  std::size_t emergent_width = 0;

  constexpr std::size_t width(Segment s) const noexcept {
    switch (s) {
      case Segment::RoleTag: return role_width;
      case Segment::Color: return kColorWidth;
      case Segment::Shape: return kShapeWidth;
      case Segment::HigherOrder: return higher_order_width;
      case Segment::Emergent: return emergent_width;
    }
    return 0;
  }

  constexpr std::size_t offset(Segment s) const noexcept {
    std::size_t off = 0;
    for (Segment seg : kAllSegments) {
      if (seg == s) return off;
      off += width(seg);
    }
    return off;
  }

  constexpr std::size_t size() const noexcept {
    return role_width + kColorWidth + kShapeWidth + higher_order_width + emergent_width;
  }

  // Layout seen by the parallel process: identical minus the role tags.
  constexpr FeatureLayout stripped() const noexcept {
    FeatureLayout l = *this;
    l.role_width = 0;
    return l;
  }

  Segment segment_of(std::size_t k) const {
    std::size_t off = 0;
    for (Segment seg : kAllSegments) {
      off += width(seg);
      if (k < off) return seg;
    }
    throw Error("dimension " + std::to_string(k) + " out of range");
  }

  // Stable identifier of dimension k, e.g. "color.rg.3" or "shape.ori4.2".
  std::string label(std::size_t k) const {
    const Segment seg = segment_of(k);
    const std::size_t local = k - offset(seg);
    std::ostringstream out;
    out << segment_name(seg) << '.';
    switch (seg) {
      case Segment::RoleTag:
      case Segment::HigherOrder:
        out << local;
        break;
      case Segment::Color: {
        static constexpr std::array<std::string_view, 3> kChannels{"wb", "rg", "by"};
        out << kChannels[local / 6] << '.' << local % 6;
        break;
      }
      case Segment::Shape: {
        static constexpr std::array<std::size_t, 8> kGroupWidths{3, 2, 2, 2, 3, 2, 2, 2};
        std::size_t rest = local;
        for (std::size_t g = 0; g < kGroupWidths.size(); ++g) {
          if (rest < kGroupWidths[g]) {
            out << "ori" << g << '.' << rest;
            return out.str();
          }
          rest -= kGroupWidths[g];
        }
        if (rest < 4) {
          out << 'L' << rest;
        } else if (rest < 8) {
          out << 'T' << rest - 4;
        } else {
          out << 'X';
        }
        break;
      }
      case Segment::Emergent:
        out << (local == 0 ? "target" : local == 1 ? "distractor" : std::to_string(local));
        break;
    }
    return out.str();
  }

  friend constexpr bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

inline void require_same_layout(const FeatureLayout& a, const FeatureLayout& b) {
  if (!(a == b)) {
    throw LayoutMismatch("feature layouts differ (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + " dimensions)");
  }
}

class FeatureVector {
 public:
  FeatureVector() = default;

  explicit FeatureVector(FeatureLayout layout) : layout_(layout), values_(layout.size(), 0) {}

  FeatureVector(FeatureLayout layout, std::vector<Trit> values)
      : layout_(layout), values_(std::move(values)) {
    if (values_.size() != layout_.size()) {
      throw LayoutMismatch("vector has " + std::to_string(values_.size()) +
                           " entries, layout declares " + std::to_string(layout_.size()));
    }
    for (Trit v : values_) check_trit(v);
  }

  const FeatureLayout& layout() const noexcept { return layout_; }
  std::size_t size() const noexcept { return values_.size(); }
  Trit operator[](std::size_t k) const noexcept { return values_[k]; }
  std::span<const Trit> values() const noexcept { return values_; }

  void set(std::size_t k, int value) {
    check_trit(value);
    values_.at(k) = static_cast<Trit>(value);
  }

  std::span<const Trit> segment(Segment s) const noexcept {
    return std::span<const Trit>(values_).subspan(layout_.offset(s), layout_.width(s));
  }

  void assign_segment(Segment s, std::span<const Trit> units) {
    if (units.size() != layout_.width(s)) {
      throw LayoutMismatch(std::string(segment_name(s)) + " segment expects " +
                           std::to_string(layout_.width(s)) + " units, got " +
                           std::to_string(units.size()));
    }
    for (Trit v : units) check_trit(v);
    std::copy(units.begin(), units.end(), values_.begin() + static_cast<std::ptrdiff_t>(layout_.offset(s)));
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  static void check_trit(int v) {
    if (v < -1 || v > 1) throw Error("feature value " + std::to_string(v) + " is not in {-1, 0, 1}");
  }

  FeatureLayout layout_{};
  std::vector<Trit> values_ = std::vector<Trit>(FeatureLayout{}.size(), 0);
};

// ---------------------------------------------------------------------------
// Canonical encodings

struct ColorEncoding {
  std::string_view name;
  std::array<Trit, FeatureLayout::kColorWidth> units;
};

struct ShapeEncoding {
  std::string_view name;
  std::array<Trit, FeatureLayout::kShapeWidth> units;
};

// clang-format off
inline constexpr std::array<ColorEncoding, 11> kColorTable{{
  //                 white/black             red/green               blue/yellow
  {"white",      { 1, 1, 1,-1,-1,-1,   0, 0, 0, 0, 0, 0,   0, 0, 0, 0, 0, 0}},
  {"black",      {-1,-1,-1, 1, 1, 1,   0, 0, 0, 0, 0, 0,   0, 0, 0, 0, 0, 0}},
  {"red",        { 0, 0, 0, 0, 0, 0,   1, 1, 1,-1,-1,-1,   0, 0, 0, 0, 0, 0}},
  {"green",      { 0, 0, 0, 0, 0, 0,  -1,-1,-1, 1, 1, 1,   0, 0, 0, 0, 0, 0}},
  {"blue",       { 0, 0, 0, 0, 0, 0,   0, 0, 0, 0, 0, 0,   1, 1, 1,-1,-1,-1}},
  {"light-blue", { 1, 1, 1, 1, 1, 1,   0, 0, 0, 0, 0, 0,   1, 1, 1,-1,-1,-1}},
  {"yellow",     { 0, 0, 0, 0, 0, 0,   1, 1, 1, 1, 1, 1,   0, 0, 0, 1, 1, 1}},
  {"orange",     { 0, 0, 0, 0, 0, 0,   1, 1, 0,-1,-1, 0,  -1, 0, 0, 1, 0, 0}},
  {"pink",       { 1, 1, 0,-1,-1, 0,   1, 0, 0,-1, 0, 0,   0, 0, 0, 0, 0, 0}},
  {"dark-green", { 1, 1, 1,-1,-1, 0,  -1,-1,-1, 1, 1, 1,   0, 0, 0, 0, 0, 0}},
  {"brown",      { 1, 1, 1,-1,-1, 0,   1, 1,-1,-1,-1, 1,   0, 0, 0, 0, 0, 0}},
}};

inline constexpr std::array<ShapeEncoding, 19> kShapeTable{{
  //            ori0     ori1  ori2  ori3  ori4     ori5  ori6  ori7  L-vertex    T-junction  X
  {"horizontal", {1,1,1,  1,0,  0,0,  0,0,  0,0,0,  0,0,  0,0,  1,0,  0,0,0,0,  0,0,0,0,  0}},
  {"vertical",   {0,0,0,  0,0,  0,0,  1,0,  1,1,1,  1,0,  0,0,  0,0,  0,0,0,0,  0,0,0,0,  0}},
  {"diag-45",    {0,0,0,  1,0,  1,1,  1,0,  0,0,0,  0,0,  0,0,  0,0,  0,0,0,0,  0,0,0,0,  0}},
  {"diag-135",   {0,0,0,  0,0,  0,0,  0,0,  0,0,0,  1,0,  1,1,  1,0,  0,0,0,0,  0,0,0,0,  0}},
  {"T1",         {1,1,1,  1,0,  0,0,  1,0,  1,1,1,  1,0,  0,0,  1,0,  0,0,0,0,  1,0,0,0,  0}},
  {"T2",         {1,1,1,  1,0,  0,0,  1,0,  1,1,1,  1,0,  0,0,  1,0,  0,0,0,0,  0,1,0,0,  0}},
  {"T3",         {1,1,1,  1,0,  0,0,  1,0,  1,1,1,  1,0,  0,0,  1,0,  0,0,0,0,  0,0,1,0,  0}},
  {"T4",         {1,1,1,  1,0,  0,0,  1,0,  1,1,1,  1,0,  0,0,  1,0,  0,0,0,0,  0,0,0,1,  0}},
  {"L1",         {1,1,1,  1,0,  0,0,  1,0,  1,1,1,  0,0,  0,0,  1,0,  1,0,0,0,  0,0,0,0,  0}},
  {"L2",         {1,1,1,  1,0,  0,0,  1,0,  1,1,1,  0,0,  0,0,  1,0,  0,1,0,0,  0,0,0,0,  0}},
  {"L3",         {1,1,1,  1,0,  0,0,  1,0,  1,1,1,  0,0,  0,0,  1,0,  0,0,1,0,  0,0,0,0,  0}},
  {"L4",         {1,1,1,  1,0,  0,0,  1,0,  1,1,1,  0,0,  0,0,  1,0,  0,0,0,1,  0,0,0,0,  0}},
  {"X",          {0,0,0,  1,0,  1,1,  1,0,  0,0,0,  1,0,  1,1,  1,0,  0,0,0,0,  0,0,0,0,  1}},
  {"O",          {1,0,0,  1,0,  0,0,  1,0,  1,0,0,  1,0,  1,0,  0,0,  0,0,0,0,  0,0,0,0,  0}},
  {"Q",          {1,0,0,  1,0,  0,0,  1,0,  1,1,1,  1,0,  1,0,  0,0,  0,0,0,0,  0,0,0,0,  0}},
  {"G1",         {1,1,1,  1,1,  1,1,  1,1,  1,1,1,  1,0,  0,0,  1,0,  1,0,0,0,  0,0,0,0,  1}},
  {"G2",         {1,1,1,  1,0,  0,0,  1,0,  1,1,1,  1,1,  1,1,  1,0,  1,0,0,0,  0,0,0,0,  0}},
  {"P1",         {1,1,1,  1,1,  1,1,  1,1,  1,1,1,  1,0,  0,0,  1,0,  1,0,1,0,  0,0,0,0,  1}},
  {"P2",         {1,1,1,  1,0,  0,0,  1,0,  1,1,1,  1,1,  1,1,  1,0,  1,0,1,0,  0,0,0,0,  0}},
}};
// clang-format on

// Requesting no color yields an all-zero color segment.
inline constexpr std::string_view kNoColor = "none";

namespace detail {

inline bool name_equals(std::string_view a, std::string_view b) noexcept {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto norm = [](char c) {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      return c == '_' ? '-' : c;
    };
    if (norm(a[i]) != norm(b[i])) return false;
  }
  return true;
}

}  // namespace detail

// Canonical spelling of a color name; "none" is accepted.
inline std::string_view canonical_color(std::string_view name) {
  if (detail::name_equals(name, kNoColor)) return kNoColor;
  for (const auto& row : kColorTable) {
    if (detail::name_equals(name, row.name)) return row.name;
  }
  throw UnknownName("color", std::string(name));
}

inline std::string_view canonical_shape(std::string_view name) {
  for (const auto& row : kShapeTable) {
    if (detail::name_equals(name, row.name)) return row.name;
  }
  throw UnknownName("shape", std::string(name));
}

inline std::array<Trit, FeatureLayout::kColorWidth> color_units(std::string_view name) {
  const std::string_view canonical = canonical_color(name);
  for (const auto& row : kColorTable) {
    if (row.name == canonical) return row.units;
  }
  return {};
}

inline std::array<Trit, FeatureLayout::kShapeWidth> shape_units(std::string_view name) {
  const std::string_view canonical = canonical_shape(name);
  for (const auto& row : kShapeTable) {
    if (row.name == canonical) return row.units;
  }
  return {};
}

/// Vector holding only the named color; every other segment is zero.
inline FeatureVector encode_color(std::string_view name, FeatureLayout layout = {}) {
  FeatureVector v(layout);
  v.assign_segment(Segment::Color, color_units(name));
  return v;
}

inline FeatureVector encode_shape(std::string_view name, FeatureLayout layout = {}) {
  FeatureVector v(layout);
  v.assign_segment(Segment::Shape, shape_units(name));
  return v;
}

// Audit tables: name, then one column per dimension label.
inline std::string color_table_csv() {
  std::ostringstream out;
  const FeatureLayout layout{};
  out << "name";
  for (std::size_t k = 0; k < FeatureLayout::kColorWidth; ++k) {
    out << ',' << layout.label(layout.offset(Segment::Color) + k);
  }
  out << '\n';
  for (const auto& row : kColorTable) {
    out << row.name;
    for (Trit v : row.units) out << ',' << static_cast<int>(v);
    out << '\n';
  }
  return out.str();
}

inline std::string shape_table_csv() {
  std::ostringstream out;
  const FeatureLayout layout{};
  out << "name";
  for (std::size_t k = 0; k < FeatureLayout::kShapeWidth; ++k) {
    out << ',' << layout.label(layout.offset(Segment::Shape) + k);
  }
  out << '\n';
  for (const auto& row : kShapeTable) {
    out << row.name;
    for (Trit v : row.units) out << ',' << static_cast<int>(v);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Salience

/// Multiplicative salience per dimension of the parallel (role-stripped)
/// layout. Salience is only read by the parallel match; stored vectors are
/// never rescaled.
class SalienceMap {
 public:
  SalienceMap() = default;
  explicit SalienceMap(std::size_t dimensions) : eta_(dimensions, 1.0) {}

  std::size_t size() const noexcept { return eta_.size(); }
  double operator[](std::size_t k) const noexcept { return eta_[k]; }
  std::span<const double> values() const noexcept { return eta_; }

  void set(std::size_t k, double eta) {
    check(eta);
    eta_.at(k) = eta;
  }

  void set_segment(const FeatureLayout& layout, Segment s, double eta) {
    check(eta);
    if (layout.size() != eta_.size()) {
      throw LayoutMismatch("salience map does not match layout");
    }
    const std::size_t off = layout.offset(s);
    for (std::size_t k = 0; k < layout.width(s); ++k) eta_[off + k] = eta;
  }

  friend bool operator==(const SalienceMap&, const SalienceMap&) = default;

 private:
  static void check(double eta) {
    if (!(eta >= 0.0)) throw Error("salience must be nonnegative");
  }

  std::vector<double> eta_;
};

}  // namespace casper
