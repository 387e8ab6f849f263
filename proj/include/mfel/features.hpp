#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfel/corpus.hpp"
#include "mfel/dimred.hpp"
#include "mfel/error.hpp"
#include "mfel/lexicon.hpp"
#include "mfel/topics.hpp"
#include "mfel/util.hpp"
#include "mfel/webcontext.hpp"

namespace mfel {

// ---------------------------------------------------------------------------
// Layout

struct Segment {
  std::string name;
  std::size_t dim = 0;

  bool operator==(const Segment&) const = default;
};

class FeatureLayout {
 public:
  FeatureLayout() = default;

  explicit FeatureLayout(std::vector<Segment> segments) : segments_(std::move(segments)) {
    std::set<std::string> seen;
    for (const auto& s : segments_) {
      if (s.dim == 0) throw LayoutMismatch("segment '" + s.name + "' has zero width");
      if (!seen.insert(s.name).second) throw LayoutMismatch("duplicate segment '" + s.name + "'");
    }
  }

  static FeatureLayout standard(std::size_t visual_dim = 128, std::size_t topics = 15,
                                std::size_t lexicon_pca = 90) {
    return FeatureLayout({{"visual", visual_dim},
                          {"topic", topics},
                          {"emotion", kEmotionCount},
                          {"emoji", 3},
                          {"lexicon_pca", lexicon_pca},
                          {"depression", 1},
                          {"user_activity", 5},
                          {"description_emotion", kEmotionCount}});
  }

  const std::vector<Segment>& segments() const { return segments_; }

  std::size_t total() const {
    std::size_t d = 0;
    for (const auto& s : segments_) d += s.dim;
    return d;
  }

  bool has(const std::string& name) const {
    return std::any_of(segments_.begin(), segments_.end(),
                       [&](const Segment& s) { return s.name == name; });
  }

  std::size_t offset(const std::string& name) const {
    std::size_t off = 0;
    for (const auto& s : segments_) {
      if (s.name == name) return off;
      off += s.dim;
    }
    throw LayoutMismatch("layout has no segment '" + name + "'");
  }

  std::size_t dim(const std::string& name) const {
    for (const auto& s : segments_)
      if (s.name == name) return s.dim;
    throw LayoutMismatch("layout has no segment '" + name + "'");
  }

  std::string describe() const {
    std::string out;
    for (const auto& s : segments_) out += s.name + ":" + std::to_string(s.dim) + ";";
    return out;
  }

  std::string fingerprint() const { return sha256_hex(describe()); }

  nlohmann::json to_json() const {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : segments_) segs.push_back({{"name", s.name}, {"dim", s.dim}});
    return {{"segments", segs}, {"total", total()}, {"fingerprint", fingerprint()}};
  }

  static FeatureLayout from_json(const nlohmann::json& j) {
    std::vector<Segment> segs;
    for (const auto& s : j.at("segments"))
      segs.push_back({s.at("name").get<std::string>(), s.at("dim").get<std::size_t>()});
    FeatureLayout layout(std::move(segs));
    if (j.contains("total") && j.at("total").get<std::size_t>() != layout.total())
      throw LayoutMismatch("layout total does not match its segments");
    return layout;
  }

  bool operator==(const FeatureLayout&) const = default;

 private:
  std::vector<Segment> segments_;
};

// Ablation letters and the segments each one removes.
inline const std::map<char, std::vector<std::string>>& modality_groups() {
  static const std::map<char, std::vector<std::string>> groups = {
      {'v', {"visual"}},
      {'t', {"topic"}},
      {'e', {"emotion", "emoji", "lexicon_pca", "description_emotion"}},
      {'d', {"depression"}},
      {'u', {"user_activity"}},
  };
  return groups;
}

inline std::set<char> parse_modalities(std::string_view letters) {
  std::set<char> out;
  for (char c : letters) {
    if (c == ',' || c == '+' || c == ' ') continue;
    if (!modality_groups().count(c)) throw UnknownModality(std::string(1, c));
    out.insert(c);
  }
  return out;
}

struct AblatedMatrix {
  Eigen::MatrixXd X;
  FeatureLayout layout;
};

// Removes the segments of the named modalities, keeping the rest in order.
inline AblatedMatrix ablate(const Eigen::MatrixXd& X, const FeatureLayout& layout,
                            const std::set<char>& drop) {
  if (static_cast<std::size_t>(X.cols()) != layout.total())
    throw LayoutMismatch("matrix has " + std::to_string(X.cols()) + " columns, layout " +
                         std::to_string(layout.total()));
  std::set<std::string> removed;
  for (char c : drop) {
    auto it = modality_groups().find(c);
    if (it == modality_groups().end()) throw UnknownModality(std::string(1, c));
    removed.insert(it->second.begin(), it->second.end());
  }
  std::vector<Segment> kept;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::size_t off = 0, width = 0;
  for (const auto& s : layout.segments()) {
    if (!removed.count(s.name)) {
      kept.push_back(s);
      ranges.emplace_back(off, s.dim);
      width += s.dim;
    }
    off += s.dim;
  }
  AblatedMatrix out;
  out.X.resize(X.rows(), static_cast<Eigen::Index>(width));
  std::size_t col = 0;
  for (auto [start, dim] : ranges) {
    out.X.middleCols(static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(dim)) =
        X.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(dim));
    col += dim;
  }
  if (!kept.empty()) out.layout = FeatureLayout(std::move(kept));
  return out;
}

// ---------------------------------------------------------------------------
// Per-modality extractors

// Element-wise mean of every image embedding the user posted; zeros when
// there are none.
inline std::vector<double> visual_feature(const UserRecord& u, std::size_t dim = 128) {
  std::vector<double> sum(dim, 0.0);
  std::size_t n = 0;
  for (const auto& t : u.tweets)
    for (const auto& e : t.image_embeddings) {
      if (e.size() != dim) throw MixedEmbeddingDims(u.user_id);
      for (std::size_t i = 0; i < dim; ++i) sum[i] += e[i];
      ++n;
    }
  if (n > 0)
    for (auto& v : sum) v /= static_cast<double>(n);
  return sum;
}

// Tweets in the window of `days` days ending at the user's latest tweet.
inline std::int64_t window_tweet_count(const UserRecord& u, int days = 30) {
  if (u.tweets.empty()) return 0;
  Instant latest = u.tweets.front().timestamp;
  for (const auto& t : u.tweets) latest = std::max(latest, t.timestamp);
  const Instant start = latest - std::chrono::days(days);
  return std::count_if(u.tweets.begin(), u.tweets.end(),
                       [&](const TweetRecord& t) { return t.timestamp > start; });
}

// [tweet_count, followers, friends, favourites, statuses] followed by the
// emotion intensity of the cleaned profile description.
inline std::vector<double> user_feature(const UserRecord& u, const EmotionLexicon& lex,
                                        std::int64_t window_count,
                                        const StopwordSet& stopwords = {},
                                        CountMode mode = CountMode::normalized) {
  std::vector<double> out{static_cast<double>(window_count),
                          static_cast<double>(u.profile.followers_count),
                          static_cast<double>(u.profile.friends_count),
                          static_cast<double>(u.profile.favourites_count),
                          static_cast<double>(u.profile.statuses_count)};
  const auto emo = emotion_intensity(clean_text(u.profile.description, stopwords), lex, mode);
  out.insert(out.end(), emo.begin(), emo.end());
  return out;
}

struct Lexicons {
  StopwordSet stopwords;
  EmotionLexicon emotion;
  EmojiSentimentTable emoji;
  CategoryLexicon categories;
  std::map<std::string, std::string> file_hashes;  // logical name -> SHA-256
};

struct LexiconPaths {
  std::string stopwords;
  std::string emotion;
  std::string emoji;
  std::string categories;
  std::string depression_terms;
};

inline Lexicons load_lexicons(const LexiconPaths& p) {
  Lexicons lx;
  lx.stopwords = load_stopwords(p.stopwords);
  lx.emotion = EmotionLexicon::load(p.emotion);
  lx.emoji = EmojiSentimentTable::load(p.emoji);
  lx.categories = CategoryLexicon::load(p.categories, p.depression_terms);
  lx.file_hashes = {{"stopwords", file_sha256(p.stopwords)},
                    {"emotion_lexicon", file_sha256(p.emotion)},
                    {"emoji_sentiment", file_sha256(p.emoji)},
                    {"categories", file_sha256(p.categories)},
                    {"depression_terms", file_sha256(p.depression_terms)}};
  return lx;
}

// Fold-independent textual statistics of one user: per-tweet vectors
// averaged over tweets, and the concatenated tokens for topic inference.
struct UserTextStats {
  std::string user_id;
  TokenDoc tokens;
  std::vector<double> emotion;     // kEmotionCount
  std::vector<double> emoji;       // 3
  std::vector<double> categories;  // general categories, depression excluded
  double depression = 0.0;
};

inline UserTextStats user_text_stats(const UserRecord& u, const Lexicons& lx,
                                     CountMode mode = CountMode::normalized) {
  if (!lx.categories.has_depression_category())
    throw LayoutMismatch("category lexicon lacks the depression category");
  UserTextStats s;
  s.user_id = u.user_id;
  s.emotion.assign(kEmotionCount, 0.0);
  s.emoji.assign(3, 0.0);
  std::vector<double> cats(lx.categories.size(), 0.0);
  for (const auto& t : u.tweets) {
    auto toks = tokenize(t.cleaned);
    s.tokens.insert(s.tokens.end(), toks.begin(), toks.end());
    const auto emo = emotion_intensity(t.cleaned, lx.emotion, mode);
    const auto emj = emoji_sentiment(t.text, lx.emoji);
    const auto cat = category_counts(t.cleaned, lx.categories, mode);
    for (std::size_t i = 0; i < kEmotionCount; ++i) s.emotion[i] += emo[i];
    for (std::size_t i = 0; i < 3; ++i) s.emoji[i] += emj[i];
    for (std::size_t i = 0; i < cats.size(); ++i) cats[i] += cat[i];
  }
  if (!u.tweets.empty()) {
    const auto n = static_cast<double>(u.tweets.size());
    for (auto& v : s.emotion) v /= n;
    for (auto& v : s.emoji) v /= n;
    for (auto& v : cats) v /= n;
  }
  auto split = split_depression(cats);
  s.categories = std::move(split.categories);
  s.depression = split.depression_score;
  return s;
}

struct TextualSegments {
  std::vector<double> topic;
  std::vector<double> emotion;
  std::vector<double> emoji;
  std::vector<double> lexicon_pca;
  double depression = 0.0;
};

inline std::vector<double> project_categories(const PcaModel& pca, const std::vector<double>& cats) {
  return transform(pca, std::span<const double>(cats));
}

// Topic fold-in uses a per-user seed so results do not depend on the order
// users are processed in.
inline TextualSegments textual_segments(const UserTextStats& s, const TopicModel& lda,
                                        const PcaModel& pca, std::uint64_t seed,
                                        std::size_t fold_iterations = 50) {
  TextualSegments out;
  out.topic = doc_topic_dist(lda, s.tokens, fold_iterations, derive_seed(seed, s.user_id));
  out.emotion = s.emotion;
  out.emoji = s.emoji;
  out.lexicon_pca = s.tokens.empty() ? std::vector<double>(pca.k(), 0.0)
                                     : project_categories(pca, s.categories);
  out.depression = s.depression;
  return out;
}

inline TextualSegments textual_features(const UserRecord& u, const Lexicons& lx,
                                        const TopicModel& lda, const PcaModel& pca,
                                        std::uint64_t seed = 0,
                                        CountMode mode = CountMode::normalized) {
  return textual_segments(user_text_stats(u, lx, mode), lda, pca, seed);
}

// ---------------------------------------------------------------------------
// Preprocessing

// Language filter on the original text, then page titles and OCR text
// appended, then cleaning, then the minimum-length filter.
inline LabeledDataset prepare_dataset(const LabeledDataset& raw, const UrlTitleCache& cache,
                                      const StopwordSet& stopwords, std::size_t min_words = 5) {
  return filter_tweets(clean_dataset(augment_dataset(drop_non_english(raw), cache), stopwords),
                       min_words);
}

// ---------------------------------------------------------------------------
// Fitted featurizer

struct FeatureConfig {
  std::size_t visual_dim = 128;
  LdaParams lda;
  std::size_t lexicon_pca = 90;
  CountMode count_mode = CountMode::normalized;
  bool lda_depressed_only = true;
  bool standardize_activity = true;
  std::size_t fold_iterations = 50;
  int window_days = 30;

  nlohmann::json to_json() const {
    return {{"visual_dim", visual_dim},
            {"lda_topics", lda.topics},
            {"lda_alpha", lda.resolved_alpha()},
            {"lda_eta", lda.eta},
            {"lda_iterations", lda.iterations},
            {"lexicon_pca", lexicon_pca},
            {"count_mode", count_mode == CountMode::raw ? "raw" : "normalized"},
            {"lda_depressed_only", lda_depressed_only},
            {"standardize_activity", standardize_activity},
            {"fold_iterations", fold_iterations},
            {"window_days", window_days}};
  }
};

// Everything featurization computes before any model is fitted.
struct PreparedUsers {
  std::vector<std::string> user_ids;
  std::vector<int> labels;
  std::vector<UserTextStats> text;
  std::vector<std::vector<double>> visual;
  std::vector<std::vector<double>> user;  // 15 = activity + description emotion
};

inline PreparedUsers prepare_users(const LabeledDataset& ds, const Lexicons& lx,
                                   const FeatureConfig& cfg) {
  PreparedUsers p;
  for (const auto& u : ds.users) {
    p.user_ids.push_back(u.user_id);
    p.labels.push_back(u.label);
    p.text.push_back(user_text_stats(u, lx, cfg.count_mode));
    p.visual.push_back(visual_feature(u, cfg.visual_dim));
    p.user.push_back(user_feature(u, lx.emotion, window_tweet_count(u, cfg.window_days),
                                  lx.stopwords, cfg.count_mode));
  }
  return p;
}

struct ActivityScaler {
  std::vector<double> mean = std::vector<double>(5, 0.0);
  std::vector<double> scale = std::vector<double>(5, 1.0);

  bool operator==(const ActivityScaler&) const = default;
  nlohmann::json to_json() const { return {{"mean", mean}, {"scale", scale}}; }
  static ActivityScaler from_json(const nlohmann::json& j) {
    return {j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
  }
};

struct Featurizer {
  FeatureConfig config;
  FeatureLayout layout;
  TopicModel lda;
  PcaModel pca;
  ActivityScaler scaler;
  std::uint64_t seed = 0;

  // Fits LDA, PCA and the activity scaler on the training rows only.
  static Featurizer fit(const PreparedUsers& p, std::span<const std::size_t> train,
                        const FeatureConfig& cfg, std::uint64_t seed) {
    Featurizer f;
    f.config = cfg;
    f.seed = seed;
    f.layout = FeatureLayout::standard(cfg.visual_dim, cfg.lda.topics, cfg.lexicon_pca);

    std::vector<TokenDoc> corpus;
    for (auto i : train)
      if (!cfg.lda_depressed_only || p.labels[i] == 1) corpus.push_back(p.text[i].tokens);
    LdaParams lp = cfg.lda;
    lp.seed = derive_seed(seed, "lda");
    f.lda = fit_lda(corpus, lp);

    std::vector<std::size_t> with_text;
    for (auto i : train)
      if (!p.text[i].tokens.empty()) with_text.push_back(i);
    if (with_text.size() < 2) throw Error("PCA needs at least two training users with text");
    const auto d = static_cast<Eigen::Index>(p.text[with_text.front()].categories.size());
    Eigen::MatrixXd C(static_cast<Eigen::Index>(with_text.size()), d);
    for (std::size_t r = 0; r < with_text.size(); ++r) {
      const auto& cats = p.text[with_text[r]].categories;
      for (Eigen::Index c = 0; c < d; ++c) C(static_cast<Eigen::Index>(r), c) = cats[static_cast<std::size_t>(c)];
    }
    f.pca = fit_pca(C, cfg.lexicon_pca);

    if (cfg.standardize_activity) {
      const auto n = static_cast<double>(train.size());
      for (std::size_t k = 0; k < 5; ++k) {
        double mean = 0.0;
        for (auto i : train) mean += p.user[i][k];
        mean /= n;
        double ss = 0.0;
        for (auto i : train) ss += (p.user[i][k] - mean) * (p.user[i][k] - mean);
        const double sd = train.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        f.scaler.mean[k] = mean;
        f.scaler.scale[k] = sd > 0 ? sd : 1.0;
      }
    }
    return f;
  }

  std::vector<double> assemble(const PreparedUsers& p, std::size_t i) const {
    const auto text = textual_segments(p.text[i], lda, pca, seed, config.fold_iterations);
    std::map<std::string, std::vector<double>> seg;
    seg["visual"] = p.visual[i];
    seg["topic"] = text.topic;
    seg["emotion"] = text.emotion;
    seg["emoji"] = text.emoji;
    seg["lexicon_pca"] = text.lexicon_pca;
    seg["depression"] = {text.depression};
    std::vector<double> activity(p.user[i].begin(), p.user[i].begin() + 5);
    for (std::size_t k = 0; k < 5; ++k) activity[k] = (activity[k] - scaler.mean[k]) / scaler.scale[k];
    seg["user_activity"] = activity;
    seg["description_emotion"] = std::vector<double>(p.user[i].begin() + 5, p.user[i].end());

    std::vector<double> out;
    out.reserve(layout.total());
    for (const auto& s : layout.segments()) {
      auto it = seg.find(s.name);
      if (it == seg.end()) throw LayoutMismatch("no extractor for segment '" + s.name + "'");
      if (it->second.size() != s.dim)
        throw LayoutMismatch("segment '" + s.name + "' produced " + std::to_string(it->second.size()) +
                             " values, layout expects " + std::to_string(s.dim));
      out.insert(out.end(), it->second.begin(), it->second.end());
    }
    for (double v : out)
      if (!std::isfinite(v)) throw Error("non-finite feature for user " + p.user_ids[i]);
    return out;
  }

  Eigen::MatrixXd transform(const PreparedUsers& p) const {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(p.user_ids.size()), static_cast<Eigen::Index>(layout.total()));
    for (std::size_t i = 0; i < p.user_ids.size(); ++i) {
      const auto row = assemble(p, i);
      for (std::size_t c = 0; c < row.size(); ++c) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
    }
    return X;
  }

  std::map<std::string, std::string> model_fingerprints() const {
    return {{"lda", sha256_hex(lda.to_json().dump())},
            {"pca", sha256_hex(pca.to_json().dump())},
            {"activity_scaler", sha256_hex(scaler.to_json().dump())}};
  }
};

// ---------------------------------------------------------------------------
// Feature matrix files

struct FeatureMatrix {
  std::vector<std::string> user_ids;
  std::vector<int> labels;
  Eigen::MatrixXd X;
  FeatureLayout layout;
};

// One row per user: id, label, then the values at full precision.
inline void write_matrix(const FeatureMatrix& m, const std::string& path) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < m.user_ids.size(); ++i) {
    out += m.user_ids[i];
    out += '\t';
    out += std::to_string(m.labels[i]);
    for (Eigen::Index c = 0; c < m.X.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m.X(static_cast<Eigen::Index>(i), c));
      out += c == 0 ? '\t' : ' ';
      out += buf;
    }
    out += '\n';
  }
  write_file(path, out);
}

inline FeatureMatrix read_matrix(const std::string& path, const FeatureLayout& layout) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open feature matrix: " + path);
  FeatureMatrix m;
  m.layout = layout;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 3) throw ParseError(lineno, "expected id<TAB>label<TAB>values");
    m.user_ids.push_back(cols[0]);
    m.labels.push_back(std::stoi(cols[1]));
    std::vector<double> row;
    const char* cur = cols[2].c_str();
    for (;;) {
      char* end = nullptr;
      const double v = std::strtod(cur, &end);
      if (end == cur) break;
      row.push_back(v);
      cur = end;
    }
    if (row.size() != layout.total()) throw DimensionMismatch(layout.total(), row.size());
    rows.push_back(std::move(row));
  }
  m.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(layout.total()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

}  // namespace mfel
