#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfel {

// Base for every error raised by the library. Callers that do not care about
// the specific failure can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error("parse error at line " + std::to_string(line) + ": " + reason),
        line_(line), reason_(reason) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class DuplicateUser : public Error {
 public:
  explicit DuplicateUser(const std::string& id)
      : Error("duplicate user_id: " + id), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class EmptyDataset : public Error {
 public:
  EmptyDataset() : Error("dataset contains no users") {}
};

class OfflineCacheMiss : public Error {
 public:
  explicit OfflineCacheMiss(const std::string& url)
      : Error("offline mode: no cache entry for " + url), url_(url) {}
  const std::string& url() const noexcept { return url_; }

 private:
  std::string url_;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : Error("dimension mismatch: expected " + std::to_string(expected) +
              ", got " + std::to_string(got)) {}
};

class MixedEmbeddingDims : public Error {
 public:
  explicit MixedEmbeddingDims(const std::string& user_id)
      : Error("image embeddings of differing dimension for user " + user_id) {}
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("corpus contains no tokens") {}
};

class DegenerateVocabulary : public Error {
 public:
  DegenerateVocabulary(std::size_t words, std::size_t topics)
      : Error("vocabulary of " + std::to_string(words) +
              " words is smaller than topic count " + std::to_string(topics)) {}
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  explicit NonFiniteLoss(const std::string& where)
      : Error("training diverged (non-finite loss) in " + where) {}
};

class LayoutMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownModality : public Error {
 public:
  explicit UnknownModality(const std::string& name)
      : Error("unknown modality: " + name) {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : Error("length mismatch: " + std::to_string(a) + " vs " +
              std::to_string(b)) {}
};

class NonBinaryLabel : public Error {
 public:
  explicit NonBinaryLabel(int value)
      : Error("label is not binary: " + std::to_string(value)) {}
};

class EmptyPopulation : public Error {
 public:
  EmptyPopulation() : Error("metrics requested for an empty population") {}
};

class SingleClass : public Error {
 public:
  SingleClass() : Error("both classes must be present") {}
};

class FoldTooSmall : public Error {
 public:
  using Error::Error;
};

class EmptyGrid : public Error {
 public:
  EmptyGrid() : Error("parameter grid is empty") {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mfel
