#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mfel/error.hpp"
#include "mfel/util.hpp"

namespace mfel {

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  bool operator==(const Fold&) const = default;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> indices_by_class(std::span<const int> y) {
  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw NonBinaryLabel(y[i]);
    by_class[static_cast<std::size_t>(y[i])].push_back(i);
  }
  if (by_class[0].empty() || by_class[1].empty()) throw SingleClass();
  return by_class;
}

}  // namespace detail

// Stratified k-fold partition. Each class is shuffled and dealt round-robin
// over the folds, continuing where the previous class stopped, so fold sizes
// and per-class counts differ by at most one.
inline std::vector<Fold> stratified_kfold(std::span<const int> y, std::size_t k,
                                          std::uint64_t seed) {
  auto by_class = detail::indices_by_class(y);
  if (k < 2) throw FoldTooSmall("k-fold needs k >= 2");
  if (k > std::min(by_class[0].size(), by_class[1].size()))
    throw FoldTooSmall("k = " + std::to_string(k) + " exceeds the size of the smaller class");
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> test(k);
  std::size_t slot = 0;
  for (auto& members : by_class) {
    rng.shuffle(members);
    for (auto idx : members) test[slot++ % k].push_back(idx);
  }
  std::vector<Fold> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(test[f].begin(), test[f].end());
    folds[f].test = test[f];
    std::vector<char> in_test(y.size(), 0);
    for (auto i : test[f]) in_test[i] = 1;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (!in_test[i]) folds[f].train.push_back(i);
  }
  return folds;
}

// Stratified train/test split with round(test_fraction * class size) test
// members per class.
inline Fold stratified_holdout(std::span<const int> y, double test_fraction, std::uint64_t seed) {
  auto by_class = detail::indices_by_class(y);
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw FoldTooSmall("holdout fraction must lie in (0, 1)");
  Rng rng(seed);
  Fold fold;
  for (auto& members : by_class) {
    rng.shuffle(members);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    if (n_test == 0 || n_test >= members.size())
      throw FoldTooSmall("holdout leaves a class without train or test members");
    fold.test.insert(fold.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    fold.train.insert(fold.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(fold.test.begin(), fold.test.end());
  std::sort(fold.train.begin(), fold.train.end());
  return fold;
}

}  // namespace mfel
