#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mfel/corpus.hpp"
#include "mfel/util.hpp"
#include "mfel/webcontext.hpp"

// Planted-signal corpus generator. Depressed users mix keywords from a
// supplied list into their tweets at a higher rate than controls and may
// carry image embeddings shifted along a fixed direction.
namespace mfel::synth {

struct SynthConfig {
  std::size_t users = 200;
  double depressed_fraction = 0.5;
  std::size_t tweets_min = 8, tweets_max = 16;
  std::size_t words_min = 8, words_max = 14;
  std::vector<std::string> keywords;  // depression-enriched vocabulary
  bool text_signal = true;
  double keyword_rate_depressed = 0.25;
  double keyword_rate_control = 0.02;
  double visual_shift = 0.0;  // 0 disables the visual signal
  double image_rate = 0.4;
  std::size_t visual_dim = 128;
  double url_rate = 0.15;
  std::uint64_t seed = 7;
};

struct SynthCorpus {
  LabeledDataset dataset;
  UrlTitleCache cache;
};

// Pronounceable filler words shared by both classes.
inline std::vector<std::string> filler_vocabulary(std::size_t n, Rng& rng) {
  static const char* onsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "pl", "st"};
  static const char* vowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  while (out.size() < n) {
    std::string w;
    const std::size_t syll = 2 + rng.below(2);
    for (std::size_t s = 0; s < syll; ++s) {
      w += onsets[rng.below(std::size(onsets))];
      w += vowels[rng.below(std::size(vowels))];
    }
    if (seen.insert(w).second) out.push_back(w);
  }
  return out;
}

inline const std::vector<std::string>& control_titles() {
  static const std::vector<std::string> t = {
      "Weekend football results and highlights", "Ten easy pasta recipes for busy evenings",
      "Local weather forecast for the week", "New phone review: battery and camera tested",
      "City council approves park renovation"};
  return t;
}

inline const std::vector<std::string>& depressed_titles() {
  static const std::vector<std::string> t = {
      "National charity helping people with Anxiety - Anxiety UK",
      "Self-harm alternatives - Stay strong",
      "Coping with depression and loneliness during lockdown",
      "Feeling hopeless? Where to find help tonight"};
  return t;
}

// One word per line; blank lines and '#' comments are skipped.
inline std::vector<std::string> load_keywords(const std::string& path) {
  std::vector<std::string> out;
  for (const auto& line : split(read_file(path), '\n'))
    if (auto w = trim(line); !w.empty() && w.front() != '#') out.emplace_back(w);
  return out;
}

inline SynthCorpus generate(const SynthConfig& cfg) {
  Rng rng(cfg.seed);
  SynthCorpus out;
  out.dataset.source_name = "synthetic";
  const auto filler = filler_vocabulary(400, rng);

  std::vector<double> direction(cfg.visual_dim);
  double norm = 0.0;
  for (auto& v : direction) {
    v = rng.normal();
    norm += v * v;
  }
  for (auto& v : direction) v /= std::sqrt(norm);

  const Instant t0 = parse_rfc3339("2020-03-01T00:00:00Z");
  const Instant fetched = parse_rfc3339("2020-06-01T00:00:00Z");
  auto url_for = [&](bool depressed_pool, std::size_t k) {
    const auto& titles = depressed_pool ? depressed_titles() : control_titles();
    const auto url = std::string("https://") + (depressed_pool ? "help" : "news") +
                     ".example.org/page" + std::to_string(k % titles.size());
    out.cache.put(url, {titles[k % titles.size()], fetched, FetchStatus::ok});
    return url;
  };

  const auto n_dep = static_cast<std::size_t>(std::llround(cfg.depressed_fraction * static_cast<double>(cfg.users)));
  for (std::size_t u = 0; u < cfg.users; ++u) {
    UserRecord user;
    user.label = u < n_dep ? 1 : 0;
    user.user_id = "u" + std::to_string(1000 + u);
    const bool dep = user.label == 1;
    user.profile.followers_count = static_cast<std::int64_t>(std::exp(rng.normal(5.0, 1.5)));
    user.profile.friends_count = static_cast<std::int64_t>(std::exp(rng.normal(5.0, 1.2)));
    user.profile.favourites_count = static_cast<std::int64_t>(std::exp(rng.normal(6.0, 1.5)));
    user.profile.statuses_count = static_cast<std::int64_t>(std::exp(rng.normal(7.0, 1.5)));
    for (int w = 0; w < 4; ++w) {
      if (!user.profile.description.empty()) user.profile.description += ' ';
      user.profile.description += filler[rng.below(filler.size())];
    }
    const double kw_rate = cfg.text_signal && !cfg.keywords.empty()
                               ? (dep ? cfg.keyword_rate_depressed : cfg.keyword_rate_control)
                               : 0.0;
    const std::size_t n_tweets = cfg.tweets_min + rng.below(cfg.tweets_max - cfg.tweets_min + 1);
    for (std::size_t k = 0; k < n_tweets; ++k) {
      TweetRecord t;
      t.tweet_id = user.user_id + "-" + std::to_string(k);
      t.timestamp = t0 + std::chrono::seconds(static_cast<std::int64_t>(rng.below(60 * 86400)));
      const std::size_t n_words = cfg.words_min + rng.below(cfg.words_max - cfg.words_min + 1);
      for (std::size_t w = 0; w < n_words; ++w) {
        if (!t.text.empty()) t.text += ' ';
        if (rng.uniform() < kw_rate) t.text += cfg.keywords[rng.below(cfg.keywords.size())];
        else t.text += filler[rng.below(filler.size())];
      }
      if (rng.uniform() < cfg.url_rate) {
        const bool pool = cfg.text_signal ? dep : rng.uniform() < 0.5;
        t.urls.push_back(url_for(pool, rng.below(16)));
      }
      const bool force_image = cfg.visual_shift > 0 && k == 0;
      if (force_image || rng.uniform() < cfg.image_rate) {
        std::vector<double> e(cfg.visual_dim);
        const double shift = dep ? cfg.visual_shift : 0.0;
        for (std::size_t i = 0; i < cfg.visual_dim; ++i) e[i] = rng.normal() + shift * direction[i];
        t.image_embeddings.push_back(std::move(e));
      }
      user.tweets.push_back(std::move(t));
    }
    out.dataset.users.push_back(std::move(user));
  }
  return out;
}

}  // namespace mfel::synth
