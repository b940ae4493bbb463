#ifndef RELINK_PATTERN_KIND_HPP
#define RELINK_PATTERN_KIND_HPP

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace relink {

// The four structural templates.
//   RP1  x -r1-> y
//   RP2  x -r1-> z -r2-> y          (progressive)
//   RP3  x -r1-> z <-r2- y          (converging coordinate)
//   RP4  x <-r1- z -r2-> y          (diverging coordinate)
enum class MetaPattern { RP1, RP2, RP3, RP4 };

inline constexpr std::array<MetaPattern, 4> kAllMetaPatterns = {
    MetaPattern::RP1, MetaPattern::RP2, MetaPattern::RP3, MetaPattern::RP4};

inline constexpr int edge_slots(MetaPattern mp) {
  return mp == MetaPattern::RP1 ? 1 : 2;
}

inline constexpr std::string_view to_string(MetaPattern mp) {
  switch (mp) {
    case MetaPattern::RP1: return "RP1";
    case MetaPattern::RP2: return "RP2";
    case MetaPattern::RP3: return "RP3";
    case MetaPattern::RP4: return "RP4";
  }
  return "?";
}

inline std::string pattern_name(MetaPattern mp) { return std::string(to_string(mp)); }

inline std::optional<MetaPattern> parse_meta_pattern(std::string_view s) {
  for (auto mp : kAllMetaPatterns) {
    if (to_string(mp) == s) return mp;
  }
  return std::nullopt;
}

inline MetaPattern meta_pattern_from_string(std::string_view s) {
  if (auto mp = parse_meta_pattern(s)) return *mp;
  throw std::invalid_argument("unknown meta pattern: " + std::string(s));
}

}  // namespace relink

#endif  // RELINK_PATTERN_KIND_HPP
