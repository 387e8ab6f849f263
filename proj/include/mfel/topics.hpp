#pragma once

#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfel/error.hpp"
#include "mfel/util.hpp"

/**
 * Latent Dirichlet Allocation by collapsed Gibbs sampling.
 *
 * Notation used in the code:
 *   doc_topic[d][t]   number of tokens of document d assigned to topic t
 *   topic_word(t, w)  number of occurrences of word w assigned to topic t
 *   topic_total[t]    sum over words of topic_word(t, .)
 *
 * Each token's topic is resampled from
 *
 *   p(t) ∝ (doc_topic[d][t] + alpha) * (topic_word(t, w) + eta)
 *                                    / (topic_total[t] + W * eta)
 *
 * with the token's own assignment removed from the counts. The reported
 * distributions are
 *
 *   document-topic  (doc_topic[d][t] + alpha) / (len(d) + T * alpha)
 *   topic-word      (topic_word(t, w) + eta) / (topic_total[t] + W * eta)
 */
namespace mfel {

using TokenDoc = std::vector<std::string>;

struct LdaParams {
  std::size_t topics = 15;
  // Non-positive alpha selects the conventional 50 / topics.
  double alpha = 0.0;
  double eta = 0.01;
  std::size_t iterations = 500;
  std::uint64_t seed = 0;

  double resolved_alpha() const {
    return alpha > 0.0 ? alpha : 50.0 / static_cast<double>(topics);
  }
};

struct TopicModel {
  std::size_t num_topics = 0;
  double alpha = 0.0;
  double eta = 0.0;
  std::vector<std::string> vocab;
  std::vector<std::int64_t> topic_word;   // num_topics x vocab.size(), row-major
  std::vector<std::int64_t> topic_total;  // num_topics
  std::string trained_on;                 // corpus fingerprint
  std::uint64_t seed = 0;

  std::size_t vocab_size() const { return vocab.size(); }

  std::int64_t count(std::size_t t, std::size_t w) const { return topic_word[t * vocab.size() + w]; }

  std::optional<std::size_t> word_id(const std::string& word) const {
    if (index_.size() != vocab.size()) rebuild_index();
    auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool operator==(const TopicModel& o) const {
    return num_topics == o.num_topics && alpha == o.alpha && eta == o.eta && vocab == o.vocab &&
           topic_word == o.topic_word && topic_total == o.topic_total &&
           trained_on == o.trained_on && seed == o.seed;
  }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t t = 0; t < num_topics; ++t)
      rows.push_back(std::vector<std::int64_t>(topic_word.begin() + t * vocab.size(),
                                               topic_word.begin() + (t + 1) * vocab.size()));
    return {{"num_topics", num_topics}, {"alpha", alpha},           {"eta", eta},
            {"vocab", vocab},           {"topic_word", rows},       {"topic_total", topic_total},
            {"trained_on", trained_on}, {"seed", seed}};
  }

  static TopicModel from_json(const nlohmann::json& j) {
    TopicModel m;
    m.num_topics = j.at("num_topics").get<std::size_t>();
    m.alpha = j.at("alpha").get<double>();
    m.eta = j.at("eta").get<double>();
    m.vocab = j.at("vocab").get<std::vector<std::string>>();
    m.topic_total = j.at("topic_total").get<std::vector<std::int64_t>>();
    m.trained_on = j.at("trained_on").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& rows = j.at("topic_word");
    if (rows.size() != m.num_topics || m.topic_total.size() != m.num_topics)
      throw Error("topic model: row count does not match num_topics");
    for (const auto& row : rows) {
      auto r = row.get<std::vector<std::int64_t>>();
      if (r.size() != m.vocab.size()) throw Error("topic model: row width does not match vocab");
      m.topic_word.insert(m.topic_word.end(), r.begin(), r.end());
    }
    for (std::size_t t = 0; t < m.num_topics; ++t) {
      std::int64_t sum = 0;
      for (std::size_t w = 0; w < m.vocab.size(); ++w) sum += m.count(t, w);
      if (sum != m.topic_total[t]) throw Error("topic model: topic totals inconsistent");
    }
    return m;
  }

 private:
  void rebuild_index() const {
    index_.clear();
    for (std::size_t w = 0; w < vocab.size(); ++w) index_.emplace(vocab[w], w);
  }
  mutable std::unordered_map<std::string, std::size_t> index_;
};

// Token-level state of a fitted corpus.
struct TopicAssignment {
  std::vector<std::vector<std::uint32_t>> topics;     // per document, per token
  std::vector<std::vector<std::int64_t>> doc_topic;   // per document, per topic
};

using SweepObserver =
    std::function<void(std::size_t sweep, const TopicModel&, const TopicAssignment&)>;

// Document-topic distribution from topic counts of one document.
inline std::vector<double> topic_proportions(const std::vector<std::int64_t>& doc_topic,
                                             double alpha) {
  const double len = static_cast<double>(std::accumulate(doc_topic.begin(), doc_topic.end(),
                                                         std::int64_t{0}));
  const double denom = len + static_cast<double>(doc_topic.size()) * alpha;
  std::vector<double> out(doc_topic.size());
  for (std::size_t t = 0; t < doc_topic.size(); ++t)
    out[t] = (static_cast<double>(doc_topic[t]) + alpha) / denom;
  return out;
}

inline std::string corpus_fingerprint(const std::vector<TokenDoc>& corpus) {
  std::string buf;
  for (const auto& doc : corpus) {
    for (const auto& w : doc) {
      buf += w;
      buf.push_back(' ');
    }
    buf.push_back('\n');
  }
  return sha256_hex(buf);
}

namespace detail {

// Draws an index from unnormalized nonnegative weights.
inline std::size_t sample_discrete(const std::vector<double>& weights, double total, Rng& rng) {
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return weights.size() - 1;
}

}  // namespace detail

inline TopicModel fit_lda(const std::vector<TokenDoc>& corpus, const LdaParams& params,
                          TopicAssignment* assignment_out = nullptr,
                          const SweepObserver& observer = {}) {
  if (params.topics < 2) throw Error("LDA needs at least two topics");
  if (params.iterations < 1) throw Error("LDA needs at least one sweep");
  if (params.eta <= 0.0) throw Error("eta must be positive");

  TopicModel model;
  model.num_topics = params.topics;
  model.alpha = params.resolved_alpha();
  model.eta = params.eta;
  model.seed = params.seed;
  model.trained_on = corpus_fingerprint(corpus);

  std::unordered_map<std::string, std::uint32_t> ids;
  std::vector<std::vector<std::uint32_t>> docs;
  docs.reserve(corpus.size());
  std::size_t total_tokens = 0;
  for (const auto& doc : corpus) {
    std::vector<std::uint32_t> d;
    d.reserve(doc.size());
    for (const auto& w : doc) {
      auto [it, inserted] = ids.emplace(w, static_cast<std::uint32_t>(model.vocab.size()));
      if (inserted) model.vocab.push_back(w);
      d.push_back(it->second);
    }
    total_tokens += d.size();
    docs.push_back(std::move(d));
  }
  if (total_tokens == 0) throw EmptyCorpus();
  const std::size_t T = params.topics;
  const std::size_t W = model.vocab.size();
  if (W < T) throw DegenerateVocabulary(W, T);

  model.topic_word.assign(T * W, 0);
  model.topic_total.assign(T, 0);
  TopicAssignment state;
  state.topics.resize(docs.size());
  state.doc_topic.assign(docs.size(), std::vector<std::int64_t>(T, 0));

  Rng rng(params.seed);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    state.topics[d].resize(docs[d].size());
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      const auto t = static_cast<std::uint32_t>(rng.below(T));
      state.topics[d][i] = t;
      ++state.doc_topic[d][t];
      ++model.topic_word[t * W + docs[d][i]];
      ++model.topic_total[t];
    }
  }

  const double alpha = model.alpha;
  const double eta = model.eta;
  const double w_eta = static_cast<double>(W) * eta;
  std::vector<double> weights(T);
  for (std::size_t sweep = 0; sweep < params.iterations; ++sweep) {
    for (std::size_t d = 0; d < docs.size(); ++d) {
      auto& m = state.doc_topic[d];
      for (std::size_t i = 0; i < docs[d].size(); ++i) {
        const std::uint32_t w = docs[d][i];
        const std::uint32_t old = state.topics[d][i];
        --m[old];
        --model.topic_word[old * W + w];
        --model.topic_total[old];
        double total = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
          weights[t] = (static_cast<double>(m[t]) + alpha) *
                       (static_cast<double>(model.topic_word[t * W + w]) + eta) /
                       (static_cast<double>(model.topic_total[t]) + w_eta);
          total += weights[t];
        }
        const auto t_new = static_cast<std::uint32_t>(detail::sample_discrete(weights, total, rng));
        state.topics[d][i] = t_new;
        ++m[t_new];
        ++model.topic_word[t_new * W + w];
        ++model.topic_total[t_new];
      }
    }
    if (observer) observer(sweep, model, state);
  }
  if (assignment_out) *assignment_out = std::move(state);
  return model;
}

// Topic distribution of an unseen document. Its tokens are Gibbs-sampled
// against the frozen model counts; unknown words are skipped. A document with
// no known words gets the uniform distribution.
inline std::vector<double> doc_topic_dist(const TopicModel& model, const TokenDoc& doc,
                                          std::size_t fold_iterations = 50,
                                          std::uint64_t seed = 0) {
  const std::size_t T = model.num_topics;
  const std::size_t W = model.vocab_size();
  std::vector<std::uint32_t> words;
  words.reserve(doc.size());
  for (const auto& w : doc)
    if (auto id = model.word_id(w)) words.push_back(static_cast<std::uint32_t>(*id));
  std::vector<std::int64_t> m(T, 0);
  if (words.empty()) return topic_proportions(m, model.alpha);

  Rng rng(seed);
  std::vector<std::uint32_t> z(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    z[i] = static_cast<std::uint32_t>(rng.below(T));
    ++m[z[i]];
  }
  const double w_eta = static_cast<double>(W) * model.eta;
  std::vector<double> weights(T);
  for (std::size_t it = 0; it < fold_iterations; ++it) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      --m[z[i]];
      double total = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        weights[t] = (static_cast<double>(m[t]) + model.alpha) *
                     (static_cast<double>(model.count(t, words[i])) + model.eta) /
                     (static_cast<double>(model.topic_total[t]) + w_eta);
        total += weights[t];
      }
      z[i] = static_cast<std::uint32_t>(detail::sample_discrete(weights, total, rng));
      ++m[z[i]];
    }
  }
  return topic_proportions(m, model.alpha);
}

// Topic-word distributions, one row per topic.
inline std::vector<std::vector<double>> term_topic_dist(const TopicModel& model) {
  const std::size_t W = model.vocab_size();
  std::vector<std::vector<double>> out(model.num_topics, std::vector<double>(W));
  for (std::size_t t = 0; t < model.num_topics; ++t) {
    const double denom = static_cast<double>(model.topic_total[t]) + static_cast<double>(W) * model.eta;
    for (std::size_t w = 0; w < W; ++w)
      out[t][w] = (static_cast<double>(model.count(t, w)) + model.eta) / denom;
  }
  return out;
}

// The k most probable words of topic t; ties keep vocabulary order.
inline std::vector<std::string> top_words(const TopicModel& model, std::size_t t, std::size_t k) {
  if (t >= model.num_topics)
    throw IndexOutOfRange("topic " + std::to_string(t) + " out of range");
  const std::size_t W = model.vocab_size();
  std::vector<std::size_t> order(W);
  std::iota(order.begin(), order.end(), 0);
  // Within a topic the probability is monotone in the count, so counts order
  // the words exactly.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return model.count(t, a) > model.count(t, b);
  });
  order.resize(std::min(k, W));
  std::vector<std::string> out;
  out.reserve(order.size());
  for (auto w : order) out.push_back(model.vocab[w]);
  return out;
}

}  // namespace mfel
