#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "mfel/lexicon.hpp"
#include "test_support.hpp"

using namespace mfel;
using testing_support::data_path;

namespace {

EmotionLexicon toy_emotions() {
  EmotionLexicon lex;
  lex.add("happy", {"Joy", "Positive"});
  lex.add("sad", {"Sadness", "Negative"});
  return lex;
}

std::size_t idx(std::string_view name) { return *emotion_index(name); }

}  // namespace

TEST(EmotionIntensity, ToyLexiconHandCount) {
  const auto v = emotion_intensity("happy happy sad", toy_emotions());
  EXPECT_DOUBLE_EQ(v[idx("joy")], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(v[idx("positive")], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(v[idx("sadness")], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(v[idx("negative")], 1.0 / 3.0);
  for (auto e : {"fear", "anger", "anticipation", "disgust", "trust", "surprise"}) EXPECT_EQ(v[idx(e)], 0.0);
}

TEST(EmotionIntensity, EmptyAndRawMode) {
  const auto zero = emotion_intensity("", toy_emotions());
  EXPECT_TRUE(std::all_of(zero.begin(), zero.end(), [](double x) { return x == 0.0; }));
  const auto raw = emotion_intensity("happy happy sad", toy_emotions(), CountMode::raw);
  EXPECT_EQ(raw[idx("joy")], 2.0);
}

TEST(EmotionIntensity, PermutationAndDuplicationInvariant) {
  const auto lex = EmotionLexicon::load(data_path("emotion_lexicon.tsv"));
  Rng rng(3);
  const std::vector<std::string> words = {"happy", "sad", "alone", "cry", "love", "rain", "friend", "fear", "xyz"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> toks;
    const std::size_t n = 1 + rng.below(10);
    for (std::size_t i = 0; i < n; ++i) toks.push_back(words[rng.below(words.size())]);
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& w : v) s += (s.empty() ? "" : " ") + w;
      return s;
    };
    const auto base = emotion_intensity(join(toks), lex);
    rng.shuffle(toks);
    EXPECT_EQ(emotion_intensity(join(toks), lex), base);
    const auto doubled = emotion_intensity(join(toks) + " " + join(toks), lex);
    for (std::size_t e = 0; e < kEmotionCount; ++e) {
      EXPECT_NEAR(doubled[e], base[e], 1e-15);
      EXPECT_GE(base[e], 0.0);
    }
  }
}

TEST(EmotionLexicon, CaseInsensitiveAndTagsValidated) {
  EmotionLexicon lex;
  lex.add("Happy", {"joy"});
  EXPECT_NE(lex.tags("happy"), 0);
  EXPECT_NE(lex.tags("HAPPY"), 0);
  EXPECT_THROW(lex.add("x", {"boredom"}), Error);
}

TEST(EmotionLexicon, BundledFileLoads) {
  const auto lex = EmotionLexicon::load(data_path("emotion_lexicon.tsv"));
  EXPECT_GT(lex.size(), 100u);
  EXPECT_NE(lex.tags("sad") & (1u << idx("sadness")), 0);
}

TEST(EmojiSentiment, MeansOfTriples) {
  EmojiSentimentTable table;
  table.add("😀", {0.7, 0.1, 0.2});
  table.add("😢", {0.0, 1.0, 0.0});
  table.add("👍", {1.0, 0.0, 0.0});
  auto v = emoji_sentiment("great 😀", table);
  EXPECT_DOUBLE_EQ(v[0], 0.7);
  EXPECT_DOUBLE_EQ(v[1], 0.1);
  EXPECT_DOUBLE_EQ(v[2], 0.2);
  v = emoji_sentiment("👍 then 😢", table);
  EXPECT_DOUBLE_EQ(v[0], 0.5);
  EXPECT_DOUBLE_EQ(v[1], 0.5);
  EXPECT_DOUBLE_EQ(v[2], 0.0);
  EXPECT_EQ(emoji_sentiment("no emoji here", table), (EmojiVector{0, 0, 0}));
}

TEST(EmojiSentiment, UnknownSkippedAndCounted) {
  EmojiSentimentTable table;
  table.add("👍", {1.0, 0.0, 0.0});
  std::size_t unknown = 0;
  const auto v = emoji_sentiment("👍 🦄 🦄", table, &unknown);
  EXPECT_EQ(unknown, 2u);
  EXPECT_DOUBLE_EQ(v[0], 1.0);
}

TEST(EmojiSentiment, SkinToneFallsBackToBase) {
  EmojiSentimentTable table;
  table.add("👍", {1.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(emoji_sentiment("👍🏽", table)[0], 1.0);
}

TEST(EmojiSentiment, ZwjSequenceIsOneEmoji) {
  EXPECT_EQ(unicode::emoji_clusters("👨‍👩‍👧 ok 🇬🇧").size(), 2u);
}

TEST(EmojiSentiment, TableRejectsBadTriples) {
  EmojiSentimentTable table;
  EXPECT_THROW(table.add("x", {0.5, 0.5, 0.5}), Error);
  EXPECT_THROW(table.add("x", {-0.1, 0.6, 0.5}), Error);
}

TEST(EmojiSentiment, OutputsInUnitRange) {
  const auto table = EmojiSentimentTable::load(data_path("emoji_sentiment.csv"));
  EXPECT_GT(table.size(), 30u);
  const auto v = emoji_sentiment("😂😭😢🙏❤️🔥😔 whatever", table);
  double sum = 0;
  for (double x : v) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
    sum += x;
  }
  EXPECT_LE(sum, 1.0 + 1e-6);
  EXPECT_GT(sum, 0.0);
}

TEST(CategoryCounts, ToyHandCount) {
  CategoryLexicon lex;
  lex.add_category("health", {"doctor"});
  lex.add_category("depression_terms", {"hopeless"});
  const auto v = category_counts("doctor hopeless hopeless", lex);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_DOUBLE_EQ(v[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(v[1], 2.0 / 3.0);
  EXPECT_EQ(category_counts("", lex), (std::vector<double>{0, 0}));
}

TEST(CategoryCounts, MultiMembershipIncrementsBoth) {
  CategoryLexicon lex;
  lex.add_category("a", {"tear", "x"});
  lex.add_category("b", {"tear"});
  const auto v = category_counts("tear y", lex, CountMode::raw);
  EXPECT_EQ(v, (std::vector<double>{1.0, 1.0}));
}

TEST(CategoryLexicon, BundledHas194PlusDepression) {
  const auto lex = CategoryLexicon::load(data_path("categories.tsv"), data_path("depression_terms.txt"));
  EXPECT_EQ(lex.size(), 195u);
  EXPECT_TRUE(lex.has_depression_category());
  EXPECT_EQ(lex.names().back(), "depression_terms");
  const auto v = category_counts("hopeless hopeless", lex);
  EXPECT_DOUBLE_EQ(v.back(), 1.0);
}

TEST(CategoryLexicon, RejectsEmptyAndDuplicateCategories) {
  CategoryLexicon lex;
  EXPECT_THROW(lex.add_category("a", {}), Error);
  lex.add_category("a", {"w"});
  EXPECT_THROW(lex.add_category("a", {"v"}), Error);
}

TEST(SplitDepression, PartitionIdentity) {
  std::vector<double> v(195, 0.0);
  v[3] = 0.2;
  v.back() = 0.4;
  const auto s = split_depression(v);
  EXPECT_EQ(s.depression_score, 0.4);
  EXPECT_EQ(s.categories.size(), 194u);
  auto joined = s.categories;
  joined.push_back(s.depression_score);
  EXPECT_EQ(joined, v);
  const auto z = split_depression(std::vector<double>(195, 0.0));
  EXPECT_EQ(z.depression_score, 0.0);
  EXPECT_TRUE(std::all_of(z.categories.begin(), z.categories.end(), [](double x) { return x == 0.0; }));
}
