#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "mfel/config.hpp"
#include "mfel/webcontext.hpp"

namespace testing_support {

inline std::string data_path(const std::string& rel) { return std::string(MFEL_DATA_DIR) + "/" + rel; }

inline mfel::LexiconPaths bundled_lexicons() {
  mfel::LexiconPaths p;
  p.stopwords = data_path("stopwords_en.txt");
  p.emotion = data_path("emotion_lexicon.tsv");
  p.emoji = data_path("emoji_sentiment.csv");
  p.categories = data_path("categories.tsv");
  p.depression_terms = data_path("depression_terms.txt");
  return p;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("mfel-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// Fixture configuration with its output redirected.
inline mfel::PipelineConfig fixture_config(const std::string& out) {
  auto cfg = mfel::load_config(data_path("fixture/config.ini"));
  cfg.out = out;
  return cfg;
}

// Transport that records how often it was used and always fails.
struct CountingTransport {
  std::shared_ptr<std::atomic<int>> calls = std::make_shared<std::atomic<int>>(0);
  mfel::HttpResponse operator()(const std::string&, const mfel::FetchPolicy&) const {
    ++*calls;
    return {0, "", "", "network disabled in tests"};
  }
};

}  // namespace testing_support
