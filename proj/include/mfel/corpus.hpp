#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfel/error.hpp"
#include "mfel/unicode.hpp"
#include "mfel/util.hpp"

namespace mfel {

using StopwordSet = std::unordered_set<std::string>;

struct ProfileInfo {
  std::int64_t followers_count = 0;
  std::int64_t friends_count = 0;
  std::int64_t favourites_count = 0;
  std::int64_t statuses_count = 0;
  std::string description;

  bool operator==(const ProfileInfo&) const = default;
};

struct TweetRecord {
  std::string tweet_id;
  Instant timestamp{};
  std::string text;
  std::vector<std::string> urls;
  std::optional<std::string> ocr_text;
  std::vector<std::vector<double>> image_embeddings;
  // Filled by clean_dataset(); empty until then.
  std::string cleaned;

  bool operator==(const TweetRecord&) const = default;
};

struct UserRecord {
  std::string user_id;
  int label = 0;  // 1 = depressed
  ProfileInfo profile;
  std::vector<TweetRecord> tweets;
  // Set by filter_tweets() when every tweet of the user was removed.
  bool no_surviving_tweets = false;

  bool operator==(const UserRecord&) const = default;
};

struct LabeledDataset {
  std::vector<UserRecord> users;
  std::string source_name;
  std::vector<std::string> warnings;

  std::size_t count_label(int label) const {
    std::size_t n = 0;
    for (const auto& u : users) n += (u.label == label);
    return n;
  }
  std::vector<int> labels() const {
    std::vector<int> y;
    y.reserve(users.size());
    for (const auto& u : users) y.push_back(u.label);
    return y;
  }
};

// Syntactic check for an absolute http(s)/ftp-style URL: scheme "://" host.
inline bool is_absolute_url(std::string_view url) {
  const auto pos = url.find("://");
  if (pos == std::string_view::npos || pos == 0) return false;
  for (std::size_t i = 0; i < pos; ++i) {
    const char c = url[i];
    const bool ok = std::isalpha(static_cast<unsigned char>(c)) ||
                    (i > 0 && (std::isdigit(static_cast<unsigned char>(c)) ||
                               c == '+' || c == '-' || c == '.'));
    if (!ok) return false;
  }
  const auto rest = url.substr(pos + 3);
  if (rest.empty() || rest.front() == '/') return false;
  for (char c : url)
    if (std::isspace(static_cast<unsigned char>(c))) return false;
  return true;
}

namespace detail {

inline std::int64_t require_count(const nlohmann::json& obj, const char* key,
                                  std::size_t line) {
  if (!obj.contains(key)) throw ParseError(line, std::string("missing key ") + key);
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ParseError(line, std::string(key) + " must be an integer");
  const auto n = v.get<std::int64_t>();
  if (n < 0) throw ParseError(line, std::string(key) + " must be nonnegative");
  return n;
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  std::size_t line) {
  if (!obj.contains(key)) throw ParseError(line, std::string("missing key ") + key);
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ParseError(line, std::string(key) + " must be a string");
  return v.get<std::string>();
}

inline void warn_unknown(const nlohmann::json& obj,
                         std::initializer_list<std::string_view> known,
                         std::string_view where, std::size_t line,
                         std::vector<std::string>& warnings) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool found = false;
    for (auto k : known) found |= (it.key() == k);
    if (!found)
      warnings.push_back("line " + std::to_string(line) + ": ignoring unknown key '" +
                         it.key() + "' in " + std::string(where));
  }
}

inline TweetRecord parse_tweet(const nlohmann::json& j, std::size_t line,
                               std::vector<std::string>& warnings) {
  if (!j.is_object()) throw ParseError(line, "tweet must be an object");
  warn_unknown(j, {"tweet_id", "timestamp", "text", "urls", "ocr_text", "image_embeddings"},
               "tweet", line, warnings);
  TweetRecord t;
  t.tweet_id = require_string(j, "tweet_id", line);
  try {
    t.timestamp = parse_rfc3339(require_string(j, "timestamp", line));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(line, e.what());
  }
  t.text = require_string(j, "text", line);
  if (!j.contains("urls") || !j.at("urls").is_array())
    throw ParseError(line, "urls must be an array");
  for (const auto& u : j.at("urls")) {
    if (!u.is_string()) throw ParseError(line, "url entries must be strings");
    auto s = u.get<std::string>();
    if (!is_absolute_url(s)) throw ParseError(line, "not an absolute URL: " + s);
    t.urls.push_back(std::move(s));
  }
  if (j.contains("ocr_text") && !j.at("ocr_text").is_null()) {
    if (!j.at("ocr_text").is_string()) throw ParseError(line, "ocr_text must be a string");
    t.ocr_text = j.at("ocr_text").get<std::string>();
  }
  if (j.contains("image_embeddings") && !j.at("image_embeddings").is_null()) {
    const auto& embs = j.at("image_embeddings");
    if (!embs.is_array()) throw ParseError(line, "image_embeddings must be an array");
    for (const auto& e : embs) {
      if (!e.is_array()) throw ParseError(line, "each image embedding must be an array");
      std::vector<double> v;
      v.reserve(e.size());
      for (const auto& x : e) {
        if (!x.is_number()) throw ParseError(line, "embedding entries must be numbers");
        v.push_back(x.get<double>());
      }
      if (!t.image_embeddings.empty() && v.size() != t.image_embeddings.front().size())
        throw ParseError(line, "image embeddings of one tweet differ in dimension");
      t.image_embeddings.push_back(std::move(v));
    }
  }
  return t;
}

}  // namespace detail

inline UserRecord parse_user_line(std::string_view text, std::size_t line,
                                  std::vector<std::string>& warnings) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line, e.what());
  }
  if (!j.is_object()) throw ParseError(line, "record must be an object");
  detail::warn_unknown(j, {"user_id", "label", "profile", "tweets"}, "user", line, warnings);
  UserRecord u;
  u.user_id = detail::require_string(j, "user_id", line);
  if (!j.contains("label") || !j.at("label").is_number_integer())
    throw ParseError(line, "label must be an integer");
  u.label = j.at("label").get<int>();
  if (u.label != 0 && u.label != 1) throw ParseError(line, "label must be 0 or 1");
  if (!j.contains("profile") || !j.at("profile").is_object())
    throw ParseError(line, "profile must be an object");
  const auto& p = j.at("profile");
  detail::warn_unknown(p, {"followers_count", "friends_count", "favourites_count",
                           "statuses_count", "description"},
                       "profile", line, warnings);
  u.profile.followers_count = detail::require_count(p, "followers_count", line);
  u.profile.friends_count = detail::require_count(p, "friends_count", line);
  u.profile.favourites_count = detail::require_count(p, "favourites_count", line);
  u.profile.statuses_count = detail::require_count(p, "statuses_count", line);
  u.profile.description = detail::require_string(p, "description", line);
  if (!j.contains("tweets") || !j.at("tweets").is_array())
    throw ParseError(line, "tweets must be an array");
  for (const auto& t : j.at("tweets")) u.tweets.push_back(detail::parse_tweet(t, line, warnings));
  return u;
}

inline LabeledDataset parse_dataset(std::istream& in, std::string source_name) {
  LabeledDataset ds;
  ds.source_name = std::move(source_name);
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    UserRecord u = parse_user_line(line, lineno, ds.warnings);
    if (!seen.insert(u.user_id).second) throw DuplicateUser(u.user_id);
    ds.users.push_back(std::move(u));
  }
  if (ds.users.empty()) throw EmptyDataset();
  return ds;
}

inline LabeledDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset: " + path);
  return parse_dataset(in, path);
}

inline nlohmann::json to_json(const UserRecord& u) {
  nlohmann::json tweets = nlohmann::json::array();
  for (const auto& t : u.tweets) {
    nlohmann::json jt = {{"tweet_id", t.tweet_id},
                         {"timestamp", format_rfc3339(t.timestamp)},
                         {"text", t.text},
                         {"urls", t.urls}};
    if (t.ocr_text) jt["ocr_text"] = *t.ocr_text;
    if (!t.image_embeddings.empty()) jt["image_embeddings"] = t.image_embeddings;
    tweets.push_back(std::move(jt));
  }
  return {{"user_id", u.user_id},
          {"label", u.label},
          {"profile",
           {{"followers_count", u.profile.followers_count},
            {"friends_count", u.profile.friends_count},
            {"favourites_count", u.profile.favourites_count},
            {"statuses_count", u.profile.statuses_count},
            {"description", u.profile.description}}},
          {"tweets", std::move(tweets)}};
}

inline void write_dataset(const LabeledDataset& ds, const std::string& path) {
  std::string out;
  for (const auto& u : ds.users) {
    out += to_json(u).dump();
    out += '\n';
  }
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Text cleaning

namespace detail {

inline bool ieq_prefix(std::string_view s, std::size_t at, std::string_view prefix) {
  if (at + prefix.size() > s.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k)
    if (std::tolower(static_cast<unsigned char>(s[at + k])) != prefix[k]) return false;
  return true;
}

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_word_byte(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Drops URLs (http://, https://, www.) up to the next whitespace and
// @-mentions, leaving a space in their place.
inline std::string strip_urls_and_mentions(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    const bool url_start =
        ieq_prefix(raw, i, "http://") || ieq_prefix(raw, i, "https://") ||
        (ieq_prefix(raw, i, "www.") && (i == 0 || !is_word_byte(raw[i - 1])));
    if (url_start) {
      while (i < raw.size() && !is_ascii_space(raw[i])) ++i;
      out.push_back(' ');
      continue;
    }
    if (raw[i] == '@' && i + 1 < raw.size() && is_word_byte(raw[i + 1])) {
      ++i;
      while (i < raw.size() && is_word_byte(raw[i])) ++i;
      out.push_back(' ');
      continue;
    }
    out.push_back(raw[i]);
    ++i;
  }
  return out;
}

inline bool is_apostrophe(char32_t c) {
  return c == '\'' || c == 0x2019 || c == 0x2018 || c == 0x02BC;
}

// Character-level normalization: case folding, apostrophes deleted, emoji
// isolated as separate tokens, everything else that is not a letter or digit
// turned into whitespace.
inline std::string normalize_chars(std::string_view text) {
  const std::u32string u = utf8::to_u32(text);
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < u.size();) {
    const std::size_t elen = unicode::emoji_cluster_length(u, i);
    if (elen > 0) {
      out.push_back(' ');
      out += utf8::from_u32(std::u32string_view(u).substr(i, elen));
      out.push_back(' ');
      i += elen;
      continue;
    }
    const char32_t c = u[i++];
    if (unicode::is_letter(c) || unicode::is_digit(c)) {
      utf8::append(out, unicode::fold_case(c));
    } else if (is_apostrophe(c)) {
      // "don't" -> "dont"
    } else {
      out.push_back(' ');
    }
  }
  return out;
}

}  // namespace detail

// Stopword entries are normalized the same way tweet tokens are, so "don't"
// in the list matches the cleaned token "dont".
inline StopwordSet load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stopword list: " + path);
  StopwordSet words;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    for (auto& w : split_ws(detail::normalize_chars(t))) words.insert(std::move(w));
  }
  return words;
}

inline std::string clean_text(std::string_view raw, const StopwordSet& stopwords) {
  const std::string normalized = detail::normalize_chars(detail::strip_urls_and_mentions(raw));
  std::string out;
  out.reserve(normalized.size());
  for (const auto& tok : split_ws(normalized)) {
    if (stopwords.count(tok)) continue;
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

inline std::vector<std::string> tokenize(std::string_view cleaned) { return split_ws(cleaned); }

// Heuristic stand-in for language identification: text counts as English
// unless more than half of its letters lie outside basic Latin.
inline bool is_probably_english(std::string_view text) {
  std::size_t letters = 0, foreign = 0;
  for (std::size_t i = 0; i < text.size();) {
    const char32_t c = utf8::decode(text, i);
    if (!unicode::is_letter(c)) continue;
    ++letters;
    if (c >= 0x80) ++foreign;
  }
  return letters == 0 || 2 * foreign <= letters;
}

// Drops tweets rejected by the language heuristic. Run on the original
// tweet text, before page titles are appended.
inline LabeledDataset drop_non_english(const LabeledDataset& ds) {
  LabeledDataset out = ds;
  for (auto& u : out.users) {
    std::vector<TweetRecord> kept;
    kept.reserve(u.tweets.size());
    for (auto& t : u.tweets)
      if (is_probably_english(t.text)) kept.push_back(std::move(t));
    u.tweets = std::move(kept);
  }
  return out;
}

// Fills TweetRecord::cleaned for every tweet.
inline LabeledDataset clean_dataset(const LabeledDataset& ds, const StopwordSet& stopwords) {
  LabeledDataset out = ds;
  for (auto& u : out.users)
    for (auto& t : u.tweets) t.cleaned = clean_text(t.text, stopwords);
  return out;
}

inline std::size_t word_count(std::string_view cleaned) { return split_ws(cleaned).size(); }

// Keeps tweets whose cleaned word count is strictly greater than min_words.
inline LabeledDataset filter_tweets(const LabeledDataset& ds, std::size_t min_words = 5) {
  LabeledDataset out = ds;
  for (auto& u : out.users) {
    std::vector<TweetRecord> kept;
    for (auto& t : u.tweets)
      if (word_count(t.cleaned) > min_words) kept.push_back(std::move(t));
    u.tweets = std::move(kept);
    u.no_surviving_tweets = u.tweets.empty();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics (URL and image coverage, tweet- and user-level)

struct StatsReport {
  std::size_t tweets = 0;
  std::size_t tweets_with_url = 0;
  std::size_t tweets_with_image = 0;
  std::size_t users = 0;
  std::size_t users_with_url = 0;
  std::size_t users_with_image = 0;

  struct Row {
    std::string name;
    double fraction;
  };

  // Rows in the fixed order of the coverage table; each with/without pair
  // sums to one.
  std::vector<Row> rows() const {
    auto frac = [](std::size_t part, std::size_t whole) {
      return whole == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(whole);
    };
    auto complement = [](std::size_t part, std::size_t whole) {
      return whole == 0 ? 0.0
                        : static_cast<double>(whole - part) / static_cast<double>(whole);
    };
    return {
        {"Tweets with no URLs", complement(tweets_with_url, tweets)},
        {"Tweets with at least one URL", frac(tweets_with_url, tweets)},
        {"Tweets with no images", complement(tweets_with_image, tweets)},
        {"Tweets with at least one image", frac(tweets_with_image, tweets)},
        {"Users who posted no URLs", complement(users_with_url, users)},
        {"Users who posted at least one URL", frac(users_with_url, users)},
        {"Users who posted no images", complement(users_with_image, users)},
        {"Users who posted at least one image", frac(users_with_image, users)},
    };
  }

  std::string to_text() const {
    std::string out = "Types of Tweets/Users                  Percentage (%)\n";
    for (const auto& r : rows()) {
      std::string name = r.name;
      name.resize(39, ' ');
      out += name + format_percent(r.fraction) + "\n";
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows()) rows_json.push_back({{"name", r.name}, {"fraction", r.fraction}});
    return {{"tweets", tweets},
            {"tweets_with_url", tweets_with_url},
            {"tweets_with_image", tweets_with_image},
            {"users", users},
            {"users_with_url", users_with_url},
            {"users_with_image", users_with_image},
            {"rows", rows_json}};
  }
};

// A tweet "has a URL" when its urls list is nonempty and "has an image" when
// it carries at least one image embedding.
inline StatsReport dataset_stats(const LabeledDataset& ds) {
  StatsReport r;
  r.users = ds.users.size();
  for (const auto& u : ds.users) {
    bool any_url = false, any_image = false;
    for (const auto& t : u.tweets) {
      ++r.tweets;
      const bool url = !t.urls.empty();
      const bool image = !t.image_embeddings.empty();
      r.tweets_with_url += url;
      r.tweets_with_image += image;
      any_url |= url;
      any_image |= image;
    }
    r.users_with_url += any_url;
    r.users_with_image += any_image;
  }
  return r;
}

}  // namespace mfel
