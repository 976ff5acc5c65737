/*
 * Copyright 2026 The weakeq Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace weakeq {

/// Raised for malformed inputs or arguments that violate an operation's
/// preconditions. Maps to CLI exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an exhaustive computation would exceed its configured budget.
/// Maps to CLI exit code 3.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kWeightTolerance = 1e-12;

using Atom = std::uint32_t;
using Label = std::uint32_t;
using Permutation = std::vector<Atom>;

inline Permutation identity_permutation(std::size_t n) {
  Permutation p(n);
  std::iota(p.begin(), p.end(), Atom{0});
  return p;
}

inline bool is_bijection(std::span<const Atom> p) {
  std::vector<char> seen(p.size(), 0);
  for (Atom x : p) {
    if (x >= p.size() || seen[x]) return false;
    seen[x] = 1;
  }
  return true;
}

inline Permutation inverse(std::span<const Atom> p) {
  Permutation inv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) inv[p[i]] = static_cast<Atom>(i);
  return inv;
}

/// (outer ∘ inner)(x) = outer(inner(x)).
inline Permutation compose(std::span<const Atom> outer, std::span<const Atom> inner) {
  Permutation r(inner.size());
  for (std::size_t i = 0; i < inner.size(); ++i) r[i] = outer[inner[i]];
  return r;
}

// ---------------------------------------------------------------------------
// WeightedSpace

/// A finite probability space: atoms 0..N-1 with strictly positive masses.
/// A space built as a product remembers its two factors so that partitions
/// on it can be decomposed into rectangles.
class WeightedSpace {
 public:
  explicit WeightedSpace(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw UsageError("space must have at least one atom");
    double total = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
        throw UsageError("weight of atom " + std::to_string(i + 1) + " must be > 0");
      }
      total += weights_[i];
    }
    if (std::abs(total - 1.0) > kWeightTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "weights sum to " << total << ", expected 1";
      throw UsageError(os.str());
    }
  }

  static std::shared_ptr<const WeightedSpace> uniform(std::size_t n) {
    return std::make_shared<const WeightedSpace>(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  static std::shared_ptr<const WeightedSpace> product(std::shared_ptr<const WeightedSpace> left,
                                                      std::shared_ptr<const WeightedSpace> right) {
    std::vector<double> w;
    w.reserve(left->size() * right->size());
    for (double x : left->weights()) {
      for (double y : right->weights()) w.push_back(x * y);
    }
    auto space = std::make_shared<WeightedSpace>(std::move(w));
    space->left_ = std::move(left);
    space->right_ = std::move(right);
    return space;
  }

  std::size_t size() const { return weights_.size(); }
  double weight(Atom x) const { return weights_[x]; }
  std::span<const double> weights() const { return weights_; }

  bool is_product() const { return left_ != nullptr; }
  const std::shared_ptr<const WeightedSpace>& left_factor() const { return left_; }
  const std::shared_ptr<const WeightedSpace>& right_factor() const { return right_; }

  /// Row-major pairing of factor atoms.
  Atom pair(Atom i, Atom j) const { return static_cast<Atom>(i * right_->size() + j); }
  std::pair<Atom, Atom> unpair(Atom x) const {
    return {static_cast<Atom>(x / right_->size()), static_cast<Atom>(x % right_->size())};
  }

  friend bool operator==(const WeightedSpace& a, const WeightedSpace& b) { return a.weights_ == b.weights_; }

 private:
  std::vector<double> weights_;
  std::shared_ptr<const WeightedSpace> left_;
  std::shared_ptr<const WeightedSpace> right_;
};

using SpacePtr = std::shared_ptr<const WeightedSpace>;

inline bool same_space(const SpacePtr& a, const SpacePtr& b) { return a == b || *a == *b; }

// ---------------------------------------------------------------------------
// Words of the free group and their enumeration

/// A reduced word over g_1^{±1}..g_r^{±1}. Letter +i is g_i, -i is g_i^{-1}.
/// The word x_1 x_2 ... x_n acts as x_1 ∘ x_2 ∘ ... ∘ x_n.
using Word = std::vector<int>;

inline std::string word_to_string(const Word& w) {
  if (w.empty()) return "e";
  std::string s;
  for (int x : w) {
    s += "g" + std::to_string(std::abs(x));
    if (x < 0) s += "^-1";
  }
  return s;
}

struct GroupEnumeration {
  int rank = 0;
  std::vector<Word> words;
  /// Index of each word with its last letter removed (0 for the identity).
  std::vector<std::size_t> parent;

  std::size_t size() const { return words.size(); }
};

/// Letter order used for lexicographic comparison: g1 < g1^-1 < g2 < ...
inline int letter_rank(int letter) { return 2 * (std::abs(letter) - 1) + (letter < 0 ? 1 : 0); }

inline int letter_from_rank(int r) { return r % 2 == 0 ? r / 2 + 1 : -(r / 2 + 1); }

/// First `count` reduced words in breadth-first, lexicographic-within-length
/// order, identity first.
inline GroupEnumeration enumerate_words(int rank, std::size_t count) {
  if (rank < 1) throw UsageError("rank must be >= 1");
  if (count < 1) throw UsageError("word count must be >= 1");
  GroupEnumeration e;
  e.rank = rank;
  e.words.reserve(count);
  e.words.emplace_back();
  e.parent.push_back(0);
  // Each level is generated from the previous level in order, appending
  // letters in rank order, so lexicographic order is preserved.
  std::size_t level_begin = 0;
  while (e.words.size() < count) {
    std::size_t level_end = e.words.size();
    for (std::size_t i = level_begin; i < level_end && e.words.size() < count; ++i) {
      for (int r = 0; r < 2 * rank && e.words.size() < count; ++r) {
        int letter = letter_from_rank(r);
        const Word& parent = e.words[i];
        if (!parent.empty() && parent.back() == -letter) continue;
        Word w = parent;
        w.push_back(letter);
        e.words.push_back(std::move(w));
        e.parent.push_back(i);
      }
    }
    level_begin = level_end;
  }
  return e;
}

// ---------------------------------------------------------------------------
// MPAction

inline constexpr std::size_t kDefaultWordCache = 16;

/// A measure-preserving action of the free group F_r on a finite space,
/// given by one atom permutation per generator. Permutations for the first
/// few enumerated words are cached.
class MPAction {
 public:
  /// Builds the word cache from the generators. Does not validate; call
  /// validate_action() or use make_action().
  MPAction(SpacePtr space, std::vector<Permutation> generators, std::size_t cached_words = kDefaultWordCache)
      : space_(std::move(space)), generators_(std::move(generators)) {
    if (generators_.empty()) throw UsageError("action needs at least one generator");
    enumeration_ = enumerate_words(static_cast<int>(generators_.size()), cached_words);
    build_cache();
  }

  /// Uses a caller-supplied cache. Intended for tests of validation.
  MPAction(SpacePtr space, std::vector<Permutation> generators, GroupEnumeration enumeration,
           std::vector<Permutation> word_perms)
      : space_(std::move(space)),
        generators_(std::move(generators)),
        enumeration_(std::move(enumeration)),
        word_perms_(std::move(word_perms)) {
    word_inverses_.reserve(word_perms_.size());
    for (const auto& p : word_perms_) word_inverses_.push_back(is_bijection(p) ? inverse(p) : p);
  }

  const SpacePtr& space() const { return space_; }
  std::size_t atoms() const { return space_->size(); }
  int rank() const { return static_cast<int>(generators_.size()); }
  const std::vector<Permutation>& generators() const { return generators_; }
  const GroupEnumeration& enumeration() const { return enumeration_; }
  std::size_t cached_words() const { return word_perms_.size(); }

  const Permutation& word_perm(std::size_t s) const { return word_perms_.at(s); }
  const Permutation& word_inverse(std::size_t s) const { return word_inverses_.at(s); }
  const std::vector<Permutation>& word_perms() const { return word_perms_; }

  /// Same action with at least `t` cached words.
  MPAction with_words(std::size_t t) const {
    if (t <= cached_words()) return *this;
    return MPAction(space_, generators_, t);
  }

 private:
  void build_cache() {
    const std::size_t n = space_->size();
    bool ok = true;
    for (const auto& g : generators_) ok = ok && g.size() == n && is_bijection(g);
    if (!ok) return;  // left empty; validate_action reports the cause
    std::vector<Permutation> letters;
    for (const auto& g : generators_) {
      letters.push_back(g);
      letters.push_back(inverse(g));
    }
    word_perms_.reserve(enumeration_.size());
    word_perms_.push_back(identity_permutation(n));
    for (std::size_t s = 1; s < enumeration_.size(); ++s) {
      const Word& w = enumeration_.words[s];
      word_perms_.push_back(compose(word_perms_[enumeration_.parent[s]], letters[letter_rank(w.back())]));
    }
    word_inverses_.reserve(word_perms_.size());
    for (const auto& p : word_perms_) word_inverses_.push_back(inverse(p));
  }

  SpacePtr space_;
  std::vector<Permutation> generators_;
  GroupEnumeration enumeration_;
  std::vector<Permutation> word_perms_;
  std::vector<Permutation> word_inverses_;
};

struct Violation {
  std::string kind;
  std::string message;
};

using ValidationReport = std::vector<Violation>;

/// Lists every violated invariant of `a`. Empty iff the action is valid.
inline ValidationReport validate_action(const MPAction& a) {
  ValidationReport report;
  const std::size_t n = a.atoms();
  const WeightedSpace& space = *a.space();
  bool all_bijective = true;
  for (std::size_t g = 0; g < a.generators().size(); ++g) {
    const auto& perm = a.generators()[g];
    const std::string name = "g" + std::to_string(g + 1);
    if (perm.size() != n) {
      report.push_back({"size", name + " has " + std::to_string(perm.size()) + " images, expected " + std::to_string(n)});
      all_bijective = false;
      continue;
    }
    if (!is_bijection(perm)) {
      report.push_back({"bijectivity", name + " is not a bijection of the atoms"});
      all_bijective = false;
      continue;
    }
    for (Atom x = 0; x < n; ++x) {
      if (std::abs(space.weight(perm[x]) - space.weight(x)) > kWeightTolerance) {
        report.push_back({"weight", name + " maps atom " + std::to_string(x + 1) + " to atom " +
                                        std::to_string(perm[x] + 1) + ": weight not preserved"});
      }
    }
  }
  if (!all_bijective) return report;
  if (a.cached_words() == 0 || a.cached_words() != a.enumeration().size()) {
    report.push_back({"cache", "word cache mismatch: cache size differs from enumeration"});
    return report;
  }
  // Recompute each word from scratch by folding its letters.
  for (std::size_t s = 0; s < a.cached_words(); ++s) {
    Permutation expect = identity_permutation(n);
    for (int letter : a.enumeration().words[s]) {
      const auto& g = a.generators()[std::abs(letter) - 1];
      expect = compose(expect, letter > 0 ? g : inverse(g));
    }
    if (a.word_perm(s) != expect) {
      report.push_back({"cache", "word cache mismatch at " + word_to_string(a.enumeration().words[s])});
    }
  }
  return report;
}

inline std::string format_report(const ValidationReport& report) {
  std::string s;
  for (const auto& v : report) s += v.kind + ": " + v.message + "\n";
  return s;
}

/// Validated construction; throws UsageError listing every violation.
inline MPAction make_action(SpacePtr space, std::vector<Permutation> generators,
                            std::size_t cached_words = kDefaultWordCache) {
  MPAction a(std::move(space), std::move(generators), cached_words);
  auto report = validate_action(a);
  if (!report.empty()) throw UsageError("invalid action:\n" + format_report(report));
  return a;
}

/// Image of `atom` under the s-th enumerated word.
inline Atom act(const MPAction& a, std::size_t s, Atom atom) {
  if (s >= a.cached_words()) throw UsageError("word index " + std::to_string(s) + " outside cached enumeration");
  if (atom >= a.atoms()) throw UsageError("atom index " + std::to_string(atom) + " out of range");
  return a.word_perm(s)[atom];
}

// ---------------------------------------------------------------------------
// Partition

/// Assignment of atoms to k labelled blocks (labels 0..k-1). Blocks may be
/// empty.
class Partition {
 public:
  Partition(SpacePtr space, std::size_t k, std::vector<Label> labels)
      : space_(std::move(space)), k_(k), labels_(std::move(labels)) {
    if (k_ < 1) throw UsageError("partition needs k >= 1");
    if (labels_.size() != space_->size()) {
      throw UsageError("partition labels " + std::to_string(labels_.size()) + " atoms, space has " +
                       std::to_string(space_->size()));
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] >= k_) {
        throw UsageError("atom " + std::to_string(i + 1) + " has label " + std::to_string(labels_[i] + 1) +
                         " outside 1.." + std::to_string(k_));
      }
    }
  }

  static Partition singletons(SpacePtr space) {
    const std::size_t n = space->size();
    std::vector<Label> labels(n);
    std::iota(labels.begin(), labels.end(), Label{0});
    return Partition(std::move(space), n, std::move(labels));
  }

  static Partition trivial(SpacePtr space) {
    const std::size_t n = space->size();
    return Partition(std::move(space), 1, std::vector<Label>(n, 0));
  }

  const SpacePtr& space() const { return space_; }
  std::size_t k() const { return k_; }
  Label label(Atom x) const { return labels_[x]; }
  std::span<const Label> labels() const { return labels_; }

  double block_weight(Label l) const {
    double w = 0.0;
    for (std::size_t x = 0; x < labels_.size(); ++x) {
      if (labels_[x] == l) w += space_->weight(static_cast<Atom>(x));
    }
    return w;
  }

 private:
  SpacePtr space_;
  std::size_t k_;
  std::vector<Label> labels_;
};

}  // namespace weakeq
