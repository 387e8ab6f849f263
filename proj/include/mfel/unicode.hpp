#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mfel/util.hpp"

// Codepoint classification sufficient for tweet cleaning and emoji
// detection. Tables cover the blocks that occur in practice; they are not a
// full Unicode property database.
namespace mfel::unicode {

constexpr char32_t kZwj = 0x200D;

inline bool is_regional_indicator(char32_t c) { return c >= 0x1F1E6 && c <= 0x1F1FF; }

inline bool is_skin_modifier(char32_t c) { return c >= 0x1F3FB && c <= 0x1F3FF; }

inline bool is_variation_selector(char32_t c) { return c == 0xFE0E || c == 0xFE0F; }

inline bool is_tag(char32_t c) { return c >= 0xE0020 && c <= 0xE007F; }

inline bool is_extended_pictographic(char32_t c) {
  if (c < 0xA9) return false;
  if (c == 0xA9 || c == 0xAE || c == 0x203C || c == 0x2049 || c == 0x2122 ||
      c == 0x2139 || c == 0x2328 || c == 0x23CF || c == 0x24C2 || c == 0x25B6 ||
      c == 0x25C0 || c == 0x2B50 || c == 0x2B55 || c == 0x3030 || c == 0x303D ||
      c == 0x3297 || c == 0x3299)
    return true;
  if ((c >= 0x2194 && c <= 0x2199) || (c >= 0x21A9 && c <= 0x21AA) ||
      (c >= 0x231A && c <= 0x231B) || (c >= 0x23E9 && c <= 0x23F3) ||
      (c >= 0x23F8 && c <= 0x23FA) || (c >= 0x25AA && c <= 0x25AB) ||
      (c >= 0x25FB && c <= 0x25FE) || (c >= 0x2600 && c <= 0x27BF) ||
      (c >= 0x2934 && c <= 0x2935) || (c >= 0x2B05 && c <= 0x2B07) ||
      (c >= 0x2B1B && c <= 0x2B1C))
    return true;
  if (c >= 0x1F000 && c <= 0x1FAFF)
    return !is_regional_indicator(c) && !is_skin_modifier(c);
  return c >= 0x1FC00 && c <= 0x1FFFD;
}

// Starts an emoji cluster (pictograph, flag half, or lone skin modifier).
inline bool starts_emoji(char32_t c) {
  return is_extended_pictographic(c) || is_regional_indicator(c) || is_skin_modifier(c);
}

inline bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' ||
         c == 0x85 || c == 0xA0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200A) ||
         c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

inline bool is_ascii_letter(char32_t c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

inline bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }

// Letters outside ASCII: everything that is not in a known punctuation,
// symbol, control, private-use or emoji range.
inline bool is_letter(char32_t c) {
  if (c < 0x80) return is_ascii_letter(c);
  if (c <= 0xBF || c == 0xD7 || c == 0xF7) return false;
  if (c >= 0x2000 && c <= 0x2BFF) return false;
  if (c >= 0x2E00 && c <= 0x2E7F) return false;
  if (c >= 0x3000 && c <= 0x303F) return false;
  if (c >= 0xD800 && c <= 0xF8FF) return false;
  if (c >= 0xFE00 && c <= 0xFE0F) return false;
  if (c >= 0xFE30 && c <= 0xFE4F) return false;
  if ((c >= 0xFF00 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) ||
      (c >= 0xFF3B && c <= 0xFF40) || (c >= 0xFF5B && c <= 0xFF65))
    return false;
  if (c >= 0xFFF0 && c <= 0xFFFF) return false;
  if (c >= 0x1F000 && c <= 0x1FFFF) return false;
  if (c >= 0xE0000) return false;
  return true;
}

inline char32_t fold_case(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 0x20;
  if (c < 0x80) return c;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if (c >= 0x100 && c <= 0x17F && c != 0x130 && c != 0x131 && c != 0x138 &&
      c != 0x149 && c != 0x178 && c != 0x17F) {
    // Latin Extended-A pairs upper/lower case on adjacent codepoints; the
    // parity of the upper-case member flips at U+0139 and again at U+0179.
    const bool upper_even = (c < 0x139) || (c >= 0x14A && c < 0x179);
    if (upper_even ? (c % 2 == 0) : (c % 2 == 1)) return c + 1;
    return c;
  }
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  return c;
}

// Length of the emoji cluster starting at s[i] (in codepoints), or 0 when
// s[i] does not begin one. A cluster is a pictograph with its modifiers,
// variation selectors and tag characters, chained by zero-width joiners;
// a regional-indicator pair; or a keycap sequence.
inline std::size_t emoji_cluster_length(std::u32string_view s, std::size_t i) {
  const std::size_t n = s.size();
  if (i >= n) return 0;
  const char32_t c = s[i];
  // Keycap: [0-9#*] FE0F? 20E3
  if (is_digit(c) || c == '#' || c == '*') {
    std::size_t j = i + 1;
    if (j < n && s[j] == 0xFE0F) ++j;
    if (j < n && s[j] == 0x20E3) return j + 1 - i;
    return 0;
  }
  if (is_regional_indicator(c)) {
    if (i + 1 < n && is_regional_indicator(s[i + 1])) return 2;
    return 1;
  }
  if (!starts_emoji(c)) return 0;
  std::size_t j = i + 1;
  for (;;) {
    while (j < n && (is_variation_selector(s[j]) || is_skin_modifier(s[j]) ||
                     is_tag(s[j]) || s[j] == 0x20E3))
      ++j;
    if (j + 1 < n && s[j] == kZwj && is_extended_pictographic(s[j + 1])) {
      j += 2;
      continue;
    }
    break;
  }
  return j - i;
}

// All emoji clusters in order of appearance, each as a UTF-8 string.
inline std::vector<std::string> emoji_clusters(std::string_view text) {
  const std::u32string u = utf8::to_u32(text);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < u.size();) {
    const std::size_t len = emoji_cluster_length(u, i);
    if (len == 0) {
      ++i;
      continue;
    }
    out.push_back(utf8::from_u32(std::u32string_view(u).substr(i, len)));
    i += len;
  }
  return out;
}

// Removes variation selectors and skin-tone modifiers, giving the base form
// used as a fallback key in emoji tables.
inline std::string strip_emoji_presentation(std::string_view cluster) {
  std::u32string out;
  for (char32_t c : utf8::to_u32(cluster))
    if (!is_variation_selector(c) && !is_skin_modifier(c)) out.push_back(c);
  return utf8::from_u32(out);
}

}  // namespace mfel::unicode
