#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mfel/corpus.hpp"
#include "mfel/error.hpp"
#include "mfel/unicode.hpp"
#include "mfel/util.hpp"

namespace mfel {

inline constexpr std::size_t kEmotionCount = 10;

// Fixed emotion order; the index is the feature index.
inline constexpr std::array<std::string_view, kEmotionCount> kEmotionNames = {
    "joy",      "fear",     "anger",    "anticipation", "disgust",
    "trust",    "surprise", "positive", "negative",     "sadness"};

using EmotionVector = std::array<double, kEmotionCount>;
using EmojiVector = std::array<double, 3>;  // positive, negative, neutral

inline std::optional<std::size_t> emotion_index(std::string_view name) {
  std::string lower;
  for (char c : trim(name)) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (std::size_t i = 0; i < kEmotionCount; ++i)
    if (kEmotionNames[i] == lower) return i;
  return std::nullopt;
}

// How lexicon hits are turned into features: divided by the token count, or
// the literal number of hits.
enum class CountMode { normalized, raw };

namespace detail {

// Lexicon keys go through the same normalization as tweet tokens. Entries
// that normalize to more than one token can never match a single token and
// yield an empty key.
inline std::string lexicon_key(std::string_view word) {
  auto parts = split_ws(normalize_chars(word));
  return parts.size() == 1 ? parts.front() : std::string();
}

}  // namespace detail

class EmotionLexicon {
 public:
  void add(std::string_view word, std::uint16_t tag_mask) {
    const auto key = detail::lexicon_key(word);
    if (key.empty()) return;
    masks_[key] |= tag_mask;
  }

  void add(std::string_view word, std::initializer_list<std::string_view> tags) {
    std::uint16_t mask = 0;
    for (auto t : tags) {
      auto idx = emotion_index(t);
      if (!idx) throw Error("unknown emotion tag: " + std::string(t));
      mask |= static_cast<std::uint16_t>(1u << *idx);
    }
    add(word, mask);
  }

  // Bit i set when the word carries emotion i. Case-insensitive.
  std::uint16_t tags(std::string_view token) const {
    auto it = masks_.find(std::string(token));
    if (it == masks_.end()) {
      const auto key = detail::lexicon_key(token);
      it = masks_.find(key);
      if (it == masks_.end()) return 0;
    }
    return it->second;
  }

  std::size_t size() const { return masks_.size(); }

  // TSV: word<TAB>tag[,tag...]
  static EmotionLexicon load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open emotion lexicon: " + path);
    EmotionLexicon lex;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto tab = t.find('\t');
      if (tab == std::string_view::npos) throw ParseError(lineno, "expected word<TAB>tags");
      std::uint16_t mask = 0;
      for (const auto& tag : split(t.substr(tab + 1), ',')) {
        auto idx = emotion_index(tag);
        if (!idx) throw ParseError(lineno, "unknown emotion tag: " + tag);
        mask |= static_cast<std::uint16_t>(1u << *idx);
      }
      lex.add(t.substr(0, tab), mask);
    }
    return lex;
  }

 private:
  std::unordered_map<std::string, std::uint16_t> masks_;
};

struct EmojiScore {
  double positive = 0, negative = 0, neutral = 0;
};

class EmojiSentimentTable {
 public:
  void add(std::string_view emoji, EmojiScore s) {
    if (s.positive < 0 || s.negative < 0 || s.neutral < 0 ||
        std::abs(s.positive + s.negative + s.neutral - 1.0) > 1e-6)
      throw Error("emoji sentiment for " + std::string(emoji) +
                  " must be nonnegative and sum to 1");
    scores_[std::string(emoji)] = s;
  }

  // Exact cluster first, then its base form without presentation selectors
  // or skin tones.
  std::optional<EmojiScore> find(std::string_view cluster) const {
    if (auto it = scores_.find(std::string(cluster)); it != scores_.end()) return it->second;
    if (auto it = scores_.find(unicode::strip_emoji_presentation(cluster)); it != scores_.end())
      return it->second;
    return std::nullopt;
  }

  std::size_t size() const { return scores_.size(); }

  // CSV: emoji,pos,neg,neutral. A header row starting with "emoji" is skipped.
  static EmojiSentimentTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open emoji table: " + path);
    EmojiSentimentTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto cols = split(t, ',');
      if (cols.size() != 4) throw ParseError(lineno, "expected emoji,pos,neg,neutral");
      if (lineno == 1 && trim(cols[0]) == "emoji") continue;
      try {
        table.add(trim(cols[0]), {std::stod(cols[1]), std::stod(cols[2]), std::stod(cols[3])});
      } catch (const std::invalid_argument&) {
        throw ParseError(lineno, "non-numeric sentiment value");
      } catch (const Error& e) {
        throw ParseError(lineno, e.what());
      }
    }
    return table;
  }

 private:
  std::unordered_map<std::string, EmojiScore> scores_;
};

inline constexpr std::string_view kDepressionCategory = "depression_terms";

// Named word sets in a fixed order. The depression category, when present,
// is always the last one.
class CategoryLexicon {
 public:
  void add_category(std::string name, const std::vector<std::string>& words) {
    if (words.empty()) throw Error("category '" + name + "' has no words");
    for (const auto& n : names_)
      if (n == name) throw Error("duplicate category: " + name);
    const auto idx = static_cast<std::uint32_t>(names_.size());
    names_.push_back(std::move(name));
    std::size_t added = 0;
    for (const auto& w : words) {
      auto key = detail::lexicon_key(w);
      if (key.empty()) continue;
      auto& cats = index_[key];
      if (cats.empty() || cats.back() != idx) {
        cats.push_back(idx);
        ++added;
      }
    }
    if (added == 0) throw Error("category '" + names_.back() + "' has no usable words");
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  const std::vector<std::uint32_t>* categories_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? nullptr : &it->second;
  }

  bool has_depression_category() const {
    return !names_.empty() && names_.back() == kDepressionCategory;
  }

  // categories.tsv holds category<TAB>word lines; the order of first
  // appearance fixes category indices. The depression list (one word per
  // line) is appended as the final category.
  static CategoryLexicon load(const std::string& categories_tsv,
                              const std::string& depression_terms) {
    std::ifstream in(categories_tsv);
    if (!in) throw Error("cannot open category lexicon: " + categories_tsv);
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<std::string>> words;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto tab = t.find('\t');
      if (tab == std::string_view::npos) throw ParseError(lineno, "expected category<TAB>word");
      std::string cat(trim(t.substr(0, tab)));
      if (!words.count(cat)) order.push_back(cat);
      words[cat].emplace_back(trim(t.substr(tab + 1)));
    }
    CategoryLexicon lex;
    for (const auto& cat : order) lex.add_category(cat, words[cat]);

    std::ifstream dep(depression_terms);
    if (!dep) throw Error("cannot open depression term list: " + depression_terms);
    std::vector<std::string> terms;
    while (std::getline(dep, line)) {
      const auto t = trim(line);
      if (!t.empty() && t.front() != '#') terms.emplace_back(t);
    }
    lex.add_category(std::string(kDepressionCategory), terms);
    return lex;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> index_;
};

// ---------------------------------------------------------------------------
// Scoring

// Share of tokens carrying each emotion (or the raw hit count).
inline EmotionVector emotion_intensity(std::string_view cleaned, const EmotionLexicon& lex,
                                       CountMode mode = CountMode::normalized) {
  EmotionVector out{};
  const auto tokens = tokenize(cleaned);
  if (tokens.empty()) return out;
  for (const auto& tok : tokens) {
    const auto mask = lex.tags(tok);
    for (std::size_t e = 0; e < kEmotionCount; ++e)
      if (mask & (1u << e)) out[e] += 1.0;
  }
  if (mode == CountMode::normalized)
    for (auto& v : out) v /= static_cast<double>(tokens.size());
  return out;
}

// Mean (positive, negative, neutral) over the emoji found in raw text.
// Emoji missing from the table are skipped and counted in *unknown.
inline EmojiVector emoji_sentiment(std::string_view raw_text, const EmojiSentimentTable& table,
                                   std::size_t* unknown = nullptr) {
  EmojiVector sum{};
  std::size_t found = 0;
  for (const auto& cluster : unicode::emoji_clusters(raw_text)) {
    const auto s = table.find(cluster);
    if (!s) {
      if (unknown) ++*unknown;
      continue;
    }
    sum[0] += s->positive;
    sum[1] += s->negative;
    sum[2] += s->neutral;
    ++found;
  }
  if (found == 0) return EmojiVector{};
  for (auto& v : sum) v /= static_cast<double>(found);
  return sum;
}

// Per-category share of tokens belonging to the category. A token in two
// categories counts for both.
inline std::vector<double> category_counts(std::string_view cleaned, const CategoryLexicon& lex,
                                           CountMode mode = CountMode::normalized) {
  std::vector<double> out(lex.size(), 0.0);
  const auto tokens = tokenize(cleaned);
  if (tokens.empty()) return out;
  for (const auto& tok : tokens)
    if (const auto* cats = lex.categories_of(tok))
      for (auto c : *cats) out[c] += 1.0;
  if (mode == CountMode::normalized)
    for (auto& v : out) v /= static_cast<double>(tokens.size());
  return out;
}

struct DepressionSplit {
  std::vector<double> categories;
  double depression_score = 0.0;
};

// Separates the trailing depression category from the general categories.
inline DepressionSplit split_depression(const std::vector<double>& v) {
  if (v.empty()) throw DimensionMismatch(1, 0);
  return {std::vector<double>(v.begin(), v.end() - 1), v.back()};
}

}  // namespace mfel
