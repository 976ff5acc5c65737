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

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "weakeq/core.hpp"

namespace weakeq {

/// Point of [0,1]^{t×k×k}. Entry (s,l,m) is the mass of (image of block l
/// under word s) ∩ block m. Stored row-major in (s,l,m).
struct StatPoint {
  std::size_t t = 0;
  std::size_t k = 0;
  std::vector<double> values;

  StatPoint() = default;
  StatPoint(std::size_t t_, std::size_t k_) : t(t_), k(k_), values(t_ * k_ * k_, 0.0) {}
  StatPoint(std::size_t t_, std::size_t k_, std::vector<double> v) : t(t_), k(k_), values(std::move(v)) {
    if (values.size() != t * k * k) throw UsageError("stat point has wrong number of entries");
  }

  std::size_t index(std::size_t s, std::size_t l, std::size_t m) const { return (s * k + l) * k + m; }
  double operator()(std::size_t s, std::size_t l, std::size_t m) const { return values[index(s, l, m)]; }
  double& operator()(std::size_t s, std::size_t l, std::size_t m) { return values[index(s, l, m)]; }

  /// First `t_prefix` word slices.
  StatPoint prefix(std::size_t t_prefix) const {
    if (t_prefix > t) throw UsageError("prefix longer than stat point");
    return StatPoint(t_prefix, k, std::vector<double>(values.begin(), values.begin() + t_prefix * k * k));
  }

  friend bool operator==(const StatPoint&, const StatPoint&) = default;
};

namespace detail {

/// Fills `out` with the statistic of `labels`. Each cell sums its weights in
/// ascending order, so labellings that differ by a weight-preserving
/// relabelling of atoms give bit-identical points.
inline void accumulate_canonical(const MPAction& a, std::span<const Label> labels, std::size_t t, StatPoint& out) {
  const WeightedSpace& space = *a.space();
  std::vector<std::pair<std::size_t, double>> terms(space.size());
  std::fill(out.values.begin(), out.values.end(), 0.0);
  for (std::size_t s = 0; s < t; ++s) {
    const Permutation& perm = a.word_perm(s);
    for (Atom x = 0; x < space.size(); ++x) terms[x] = {out.index(s, labels[x], labels[perm[x]]), space.weight(x)};
    std::sort(terms.begin(), terms.end());
    for (const auto& [cell, w] : terms) out.values[cell] += w;
  }
}

}  // namespace detail

inline void require_words(const MPAction& a, std::size_t t) {
  if (t < 1) throw UsageError("t must be >= 1");
  if (t > a.cached_words()) {
    throw UsageError("t = " + std::to_string(t) + " exceeds the " + std::to_string(a.cached_words()) +
                     " cached words of the action");
  }
}

/// Statistic of partition `p` under the first `t` words of `a`. One pass over
/// the atoms per word.
inline StatPoint stat_point(const MPAction& a, const Partition& p, std::size_t t) {
  if (!same_space(a.space(), p.space())) throw UsageError("partition and action live on different spaces");
  require_words(a, t);
  StatPoint out(t, p.k());
  detail::accumulate_canonical(a, p.labels(), t, out);
  return out;
}

inline double l1_distance(const StatPoint& x, const StatPoint& y) {
  if (x.t != y.t || x.k != y.k) {
    throw UsageError("shape mismatch: (" + std::to_string(x.t) + "," + std::to_string(x.k) + ") vs (" +
                     std::to_string(y.t) + "," + std::to_string(y.k) + ")");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) d += std::abs(x.values[i] - y.values[i]);
  return d;
}

/// l1 distance that gives up once the partial sum exceeds `cutoff`; the
/// returned value is then only known to be > cutoff.
inline double l1_distance_bounded(const StatPoint& x, const StatPoint& y, double cutoff) {
  double d = 0.0;
  const std::size_t n = x.values.size();
  for (std::size_t i = 0; i < n; ++i) {
    d += std::abs(x.values[i] - y.values[i]);
    if (d > cutoff) return d;
  }
  return d;
}

/// Maintains the statistic of a mutable labelling under single-atom
/// relabelling moves. Each move touches at most four cells per word.
class StatTracker {
 public:
  StatTracker(const MPAction& a, std::size_t t, std::size_t k, std::vector<Label> labels)
      : action_(&a), t_(t), k_(k), labels_(std::move(labels)), stat_(t, k) {
    require_words(a, t);
    if (labels_.size() != a.atoms()) throw UsageError("labelling size does not match action");
    resync();
  }

  const StatPoint& stat() const { return stat_; }
  const std::vector<Label>& labels() const { return labels_; }
  std::size_t t() const { return t_; }
  std::size_t k() const { return k_; }

  /// Recomputes the table from scratch, removing accumulated rounding drift.
  void resync() { detail::accumulate_canonical(*action_, labels_, t_, stat_); }

  /// Flat indices of every cell that relabel(x, to) would change (possibly
  /// with duplicates).
  void cells_touched(Atom x, Label to, std::vector<std::size_t>& out) const {
    const Label from = labels_[x];
    if (from == to) return;
    for (std::size_t s = 0; s < t_; ++s) {
      const Atom image = action_->word_perm(s)[x];
      if (image == x) {
        out.push_back(stat_.index(s, from, from));
        out.push_back(stat_.index(s, to, to));
        continue;
      }
      const Label li = labels_[action_->word_perm(s)[x]];
      const Label lp = labels_[action_->word_inverse(s)[x]];
      out.push_back(stat_.index(s, from, li));
      out.push_back(stat_.index(s, lp, from));
      out.push_back(stat_.index(s, to, li));
      out.push_back(stat_.index(s, lp, to));
    }
  }

  /// Moves atom x to block `to`.
  void relabel(Atom x, Label to, std::vector<std::size_t>* touched = nullptr) {
    const Label from = labels_[x];
    if (from == to) return;
    const double w = action_->space()->weight(x);
    for (std::size_t s = 0; s < t_; ++s) {
      const Atom image = action_->word_perm(s)[x];
      if (image == x) {
        bump(s, from, from, -w, touched);
        bump(s, to, to, w, touched);
        continue;
      }
      const Atom pre = action_->word_inverse(s)[x];
      const Label li = labels_[image];
      const Label lp = labels_[pre];
      bump(s, from, li, -w, touched);
      bump(s, lp, from, -w, touched);
      bump(s, to, li, w, touched);
      bump(s, lp, to, w, touched);
    }
    labels_[x] = to;
  }

 private:
  void bump(std::size_t s, std::size_t l, std::size_t m, double dw, std::vector<std::size_t>* touched) {
    const std::size_t idx = stat_.index(s, l, m);
    stat_.values[idx] += dw;
    if (touched) touched->push_back(idx);
  }

  const MPAction* action_;
  std::size_t t_;
  std::size_t k_;
  std::vector<Label> labels_;
  StatPoint stat_;
};

}  // namespace weakeq
