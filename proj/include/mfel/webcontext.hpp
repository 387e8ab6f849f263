#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfel/corpus.hpp"
#include "mfel/error.hpp"
#include "mfel/util.hpp"

namespace mfel {

// ---------------------------------------------------------------------------
// URL extraction

// Every maximal http(s) URL substring, in order of appearance, duplicates
// included. A URL ends at whitespace or at a character that cannot appear
// unescaped in one (<, >, ").
inline std::vector<std::string> extract_urls(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto ends_url = [](char c) {
    return detail::is_ascii_space(c) || c == '<' || c == '>' || c == '"';
  };
  while (i < text.size()) {
    std::size_t prefix = 0;
    if (detail::ieq_prefix(text, i, "https://")) prefix = 8;
    else if (detail::ieq_prefix(text, i, "http://")) prefix = 7;
    if (prefix == 0) {
      ++i;
      continue;
    }
    std::size_t j = i + prefix;
    while (j < text.size() && !ends_url(text[j])) ++j;
    if (j > i + prefix) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

// URLs of a tweet: the record's urls field when present, otherwise the ones
// found in its text.
inline std::vector<std::string> tweet_urls(const TweetRecord& t) {
  return t.urls.empty() ? extract_urls(t.text) : t.urls;
}

inline std::string url_host(std::string_view url) {
  auto pos = url.find("://");
  std::string_view rest = pos == std::string_view::npos ? url : url.substr(pos + 3);
  rest = rest.substr(0, rest.find_first_of("/?#"));
  if (auto at = rest.rfind('@'); at != std::string_view::npos) rest = rest.substr(at + 1);
  if (auto colon = rest.rfind(':'); colon != std::string_view::npos && rest.front() != '[')
    rest = rest.substr(0, colon);
  std::string host(rest);
  std::transform(host.begin(), host.end(), host.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return host;
}

// Resolves a Location header against the URL that produced it.
inline std::string resolve_location(std::string_view base, std::string_view location) {
  if (is_absolute_url(location)) return std::string(location);
  const auto scheme_end = base.find("://");
  const std::string scheme(base.substr(0, scheme_end));
  if (location.size() >= 2 && location.substr(0, 2) == "//") return scheme + ":" + std::string(location);
  const auto authority_end = base.find_first_of("/?#", scheme_end + 3);
  const std::string origin(base.substr(0, authority_end));
  if (!location.empty() && location.front() == '/') return origin + std::string(location);
  std::string_view path = authority_end == std::string_view::npos
                              ? std::string_view("/")
                              : base.substr(authority_end);
  path = path.substr(0, path.find_first_of("?#"));
  const auto slash = path.rfind('/');
  return origin + std::string(path.substr(0, slash + 1)) + std::string(location);
}

// ---------------------------------------------------------------------------
// HTML title extraction

namespace detail {

inline std::size_t ifind(std::string_view hay, std::string_view needle, std::size_t from = 0) {
  if (needle.empty()) return from;
  for (std::size_t i = from; i + needle.size() <= hay.size(); ++i)
    if (ieq_prefix(hay, i, needle)) return i;
  return std::string_view::npos;
}

inline std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    const auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back(s[i++]);
      continue;
    }
    const std::string_view name = s.substr(i + 1, semi - i - 1);
    char32_t cp = 0;
    if (name == "amp") cp = '&';
    else if (name == "lt") cp = '<';
    else if (name == "gt") cp = '>';
    else if (name == "quot") cp = '"';
    else if (name == "apos") cp = '\'';
    else if (name == "nbsp") cp = ' ';
    else if (name.size() > 1 && name[0] == '#') {
      const bool hex = name[1] == 'x' || name[1] == 'X';
      const std::string digits(name.substr(hex ? 2 : 1));
      if (!digits.empty()) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(digits.c_str(), &end, hex ? 16 : 10);
        if (end && *end == '\0' && v > 0 && v <= 0x10FFFF) cp = static_cast<char32_t>(v);
      }
    }
    if (cp == 0) {
      out.push_back(s[i++]);
      continue;
    }
    utf8::append(out, cp);
    i = semi + 1;
  }
  return out;
}

inline std::string collapse_ws(std::string_view s) {
  std::string out;
  for (const auto& w : split_ws(s)) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

// Attribute map of a start tag body such as ` property="og:title" content="X"`.
inline std::map<std::string, std::string> parse_attributes(std::string_view tag) {
  std::map<std::string, std::string> attrs;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < tag.size() && (is_ascii_space(tag[i]) || tag[i] == '/')) ++i;
  };
  while (i < tag.size()) {
    skip_ws();
    const std::size_t name_start = i;
    while (i < tag.size() && !is_ascii_space(tag[i]) && tag[i] != '=' && tag[i] != '/') ++i;
    if (i == name_start) break;
    std::string name(tag.substr(name_start, i - name_start));
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    while (i < tag.size() && is_ascii_space(tag[i])) ++i;
    std::string value;
    if (i < tag.size() && tag[i] == '=') {
      ++i;
      while (i < tag.size() && is_ascii_space(tag[i])) ++i;
      if (i < tag.size() && (tag[i] == '"' || tag[i] == '\'')) {
        const char q = tag[i++];
        const auto close = tag.find(q, i);
        const auto stop = close == std::string_view::npos ? tag.size() : close;
        value = std::string(tag.substr(i, stop - i));
        i = stop == tag.size() ? stop : stop + 1;
      } else {
        const std::size_t v0 = i;
        while (i < tag.size() && !is_ascii_space(tag[i])) ++i;
        value = std::string(tag.substr(v0, i - v0));
      }
    }
    attrs.emplace(std::move(name), std::move(value));
  }
  return attrs;
}

}  // namespace detail

// Text of the first <title> element, whitespace-collapsed; falls back to the
// og:title meta property. Markup errors are tolerated.
inline std::optional<std::string> html_title(std::string_view doc) {
  std::size_t pos = 0;
  while ((pos = detail::ifind(doc, "<title", pos)) != std::string_view::npos) {
    const std::size_t after = pos + 6;
    if (after < doc.size() && (doc[after] == '>' || detail::is_ascii_space(doc[after]))) {
      const auto open_end = doc.find('>', after);
      if (open_end == std::string_view::npos) break;
      auto close = detail::ifind(doc, "</title", open_end + 1);
      if (close == std::string_view::npos) close = doc.size();
      auto title = detail::collapse_ws(
          detail::decode_entities(doc.substr(open_end + 1, close - open_end - 1)));
      if (!title.empty()) return title;
      break;
    }
    pos = after;
  }
  pos = 0;
  while ((pos = detail::ifind(doc, "<meta", pos)) != std::string_view::npos) {
    const auto end = doc.find('>', pos);
    const auto stop = end == std::string_view::npos ? doc.size() : end;
    const auto attrs = detail::parse_attributes(doc.substr(pos + 5, stop - pos - 5));
    auto prop = attrs.find("property");
    if (prop == attrs.end()) prop = attrs.find("name");
    if (prop != attrs.end() && prop->second == "og:title") {
      if (auto content = attrs.find("content"); content != attrs.end()) {
        auto title = detail::collapse_ws(detail::decode_entities(content->second));
        if (!title.empty()) return title;
      }
    }
    pos = stop;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Title cache

enum class FetchStatus { ok, failed, skipped };

inline std::string to_string(FetchStatus s) {
  switch (s) {
    case FetchStatus::ok: return "ok";
    case FetchStatus::failed: return "failed";
    case FetchStatus::skipped: return "skipped";
  }
  return "failed";
}

inline FetchStatus fetch_status_from_string(std::string_view s) {
  if (s == "ok") return FetchStatus::ok;
  if (s == "failed") return FetchStatus::failed;
  if (s == "skipped") return FetchStatus::skipped;
  throw Error("unknown cache status: " + std::string(s));
}

struct CacheEntry {
  std::optional<std::string> title;
  Instant fetched_at{};
  FetchStatus status = FetchStatus::failed;

  bool operator==(const CacheEntry&) const = default;
};

// URL -> title map persisted as a JSON object. Reads may run concurrently;
// writes are serialized.
class UrlTitleCache {
 public:
  UrlTitleCache() = default;
  UrlTitleCache(const UrlTitleCache& other) : entries_(other.snapshot()) {}
  UrlTitleCache& operator=(const UrlTitleCache& other) {
    if (this != &other) {
      auto copy = other.snapshot();
      std::unique_lock lock(mu_);
      entries_ = std::move(copy);
    }
    return *this;
  }

  std::optional<CacheEntry> find(const std::string& url) const {
    std::shared_lock lock(mu_);
    auto it = entries_.find(url);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& url, CacheEntry entry) {
    std::unique_lock lock(mu_);
    entries_[url] = std::move(entry);
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
  }

  std::map<std::string, CacheEntry> snapshot() const {
    std::shared_lock lock(mu_);
    return entries_;
  }

  bool operator==(const UrlTitleCache& other) const { return snapshot() == other.snapshot(); }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [url, e] : snapshot()) {
      j[url] = {{"title", e.title ? nlohmann::json(*e.title) : nlohmann::json(nullptr)},
                {"fetched_at", format_rfc3339(e.fetched_at)},
                {"status", to_string(e.status)}};
    }
    return j;
  }

  static UrlTitleCache from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("title cache must be a JSON object");
    UrlTitleCache cache;
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& v = it.value();
      CacheEntry e;
      if (v.contains("title") && v.at("title").is_string()) e.title = v.at("title").get<std::string>();
      e.fetched_at = parse_rfc3339(v.at("fetched_at").get<std::string>());
      e.status = fetch_status_from_string(v.at("status").get<std::string>());
      cache.entries_.emplace(it.key(), std::move(e));
    }
    return cache;
  }

  void save(const std::string& path) const { write_file(path, to_json().dump(2) + "\n"); }

  static UrlTitleCache load(const std::string& path) {
    try {
      return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
      throw Error("malformed title cache " + path + ": " + e.what());
    }
  }

 private:
  std::map<std::string, CacheEntry> entries_;
  mutable std::shared_mutex mu_;
};

// ---------------------------------------------------------------------------
// Fetching

struct FetchPolicy {
  bool offline = false;
  std::chrono::seconds timeout{10};
  int max_redirects = 5;
  std::size_t max_body_bytes = 1 << 20;
  std::size_t max_in_flight_per_host = 1;
  std::size_t max_concurrency = 8;
  // Failed entries are not retried until this much time has passed.
  std::chrono::seconds failed_cooldown{std::chrono::hours(24)};
  std::size_t max_title_chars = 300;
};

// Result of a single GET without redirect following.
struct HttpResponse {
  int status = 0;  // 0 = transport failure
  std::string location;
  std::string body;
  std::string error;
};

using HttpTransport = std::function<HttpResponse(const std::string& url, const FetchPolicy&)>;
using Clock = std::function<Instant()>;

inline Instant system_now() {
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

inline std::string truncate_chars(const std::string& s, std::size_t max_chars) {
  std::size_t i = 0, n = 0;
  while (i < s.size() && n < max_chars) {
    utf8::decode(s, i);
    ++n;
  }
  return s.substr(0, i);
}

// Resolves one URL to its page title. Cache hits are returned directly.
// In offline mode a missing entry raises OfflineCacheMiss and the transport
// is never called; online failures are recorded in the cache, not raised.
inline std::optional<std::string> fetch_title(const std::string& url, UrlTitleCache& cache,
                                              const FetchPolicy& policy,
                                              const HttpTransport& transport,
                                              const Clock& now = system_now) {
  if (auto hit = cache.find(url)) {
    if (hit->status == FetchStatus::ok) return hit->title;
    if (policy.offline || now() - hit->fetched_at < policy.failed_cooldown) return std::nullopt;
  } else if (policy.offline) {
    throw OfflineCacheMiss(url);
  }
  if (!transport) throw Error("online fetch requested without a transport");

  auto fail = [&] {
    cache.put(url, CacheEntry{std::nullopt, now(), FetchStatus::failed});
    return std::optional<std::string>{};
  };
  std::string current = url;
  for (int redirects = 0;; ++redirects) {
    const HttpResponse resp = transport(current, policy);
    if (resp.status >= 300 && resp.status < 400 && !resp.location.empty()) {
      if (redirects >= policy.max_redirects) return fail();
      current = resolve_location(current, resp.location);
      continue;
    }
    if (resp.status < 200 || resp.status >= 300) return fail();
    const std::string_view body(resp.body.data(), std::min(resp.body.size(), policy.max_body_bytes));
    auto title = html_title(body);
    if (!title) return fail();
    *title = truncate_chars(*title, policy.max_title_chars);
    cache.put(url, CacheEntry{*title, now(), FetchStatus::ok});
    return title;
  }
}

struct FetchSummary {
  std::size_t distinct_urls = 0;
  std::size_t resolved = 0;  // ok entries after the run
  std::size_t failed = 0;
  std::vector<std::string> offline_misses;
};

// Resolves every distinct URL in the dataset once. URLs are grouped by host;
// each host is served by one worker at a time and at most
// policy.max_concurrency hosts are processed in parallel.
inline FetchSummary fetch_all_titles(const LabeledDataset& ds, UrlTitleCache& cache,
                                     const FetchPolicy& policy, const HttpTransport& transport,
                                     const Clock& now = system_now) {
  std::vector<std::string> distinct;
  {
    std::unordered_set<std::string> seen;
    for (const auto& u : ds.users)
      for (const auto& t : u.tweets)
        for (auto& url : tweet_urls(t))
          if (seen.insert(url).second) distinct.push_back(std::move(url));
  }
  std::map<std::string, std::vector<std::string>> by_host;
  for (const auto& url : distinct) by_host[url_host(url)].push_back(url);
  std::vector<const std::vector<std::string>*> groups;
  for (const auto& [host, urls] : by_host) groups.push_back(&urls);

  FetchSummary summary;
  summary.distinct_urls = distinct.size();
  std::mutex summary_mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t g = next.fetch_add(1);
      if (g >= groups.size()) return;
      for (const auto& url : *groups[g]) {
        try {
          fetch_title(url, cache, policy, transport, now);
        } catch (const OfflineCacheMiss& e) {
          std::lock_guard lock(summary_mu);
          summary.offline_misses.push_back(e.url());
        }
      }
    }
  };
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(policy.max_concurrency, groups.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::sort(summary.offline_misses.begin(), summary.offline_misses.end());
  for (const auto& url : distinct) {
    const auto e = cache.find(url);
    if (!e) continue;
    if (e->status == FetchStatus::ok) ++summary.resolved;
    else ++summary.failed;
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Augmentation

// Copy of the tweet with each title and then the OCR text appended, each
// separated by one space.
inline TweetRecord augment_tweet(const TweetRecord& t, const std::vector<std::string>& titles) {
  TweetRecord out = t;
  for (const auto& title : titles) out.text += " " + title;
  if (t.ocr_text) out.text += " " + *t.ocr_text;
  return out;
}

// Titles available in the cache for a tweet's URLs; missing or failed
// entries contribute nothing.
inline std::vector<std::string> cached_titles(const TweetRecord& t, const UrlTitleCache& cache) {
  std::vector<std::string> titles;
  for (const auto& url : tweet_urls(t))
    if (auto e = cache.find(url); e && e->status == FetchStatus::ok && e->title)
      titles.push_back(*e->title);
  return titles;
}

inline LabeledDataset augment_dataset(const LabeledDataset& ds, const UrlTitleCache& cache) {
  LabeledDataset out = ds;
  for (auto& u : out.users)
    for (auto& t : u.tweets) t = augment_tweet(t, cached_titles(t, cache));
  return out;
}

}  // namespace mfel
