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
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "weakeq/csets.hpp"

namespace weakeq {

/// Truncation of the fine metric: words 1..T, block counts 1..K.
struct TruncationParams {
  std::size_t T = 2;
  /// 0 selects the atom count of the larger space.
  std::size_t K = 0;
  SearchConfig search;
  std::map<std::pair<std::size_t, std::size_t>, SearchConfig> overrides;
  Mode mode = Mode::automatic;
  std::uint64_t budget = kDefaultBudget;

  const SearchConfig& config_for(std::size_t t, std::size_t k) const {
    auto it = overrides.find({t, k});
    return it == overrides.end() ? search : it->second;
  }

  std::size_t resolved_K(const MPAction& a, const MPAction& b) const {
    return K == 0 ? std::max(a.atoms(), b.atoms()) : K;
  }

  void validate() const {
    if (T < 1) throw UsageError("T must be >= 1");
    search.validate();
    for (const auto& [cell, cfg] : overrides) cfg.validate();
  }
};

/// Σ_{t>T} 2^{-t}·2t = 2(T+2)/2^T: what the omitted words could add, since
/// each word slice of a stat point has total mass 1.
inline double tail_bound(std::size_t T) { return 2.0 * static_cast<double>(T + 2) / std::ldexp(1.0, static_cast<int>(T)); }

/// Σ_{t≤T} 2^{-t}·2t: the largest value the truncated sum can take.
inline double truncated_value_bound(std::size_t T) { return 4.0 - tail_bound(T); }

struct FineDistanceResult {
  double value = 0.0;
  std::size_t T = 0;
  std::size_t K = 0;
  /// table[t-1][k-1] = d_H at (t, k).
  std::vector<std::vector<double>> table;
  std::vector<std::vector<bool>> cell_exact;
  double tail_bound = 0.0;
  /// True only if every cell was computed by exhaustive enumeration. Even
  /// then the value is the truncated sum, not the full series.
  bool exact = false;
};

/// Truncated fine distance Σ_{t≤T} 2^{-t} max_{k≤K} d_H(C_{t,k}(a), C_{t,k}(b)).
inline FineDistanceResult fine_distance(const MPAction& a, const MPAction& b, const TruncationParams& p) {
  p.validate();
  if (a.rank() != b.rank()) throw UsageError("actions have different ranks");
  const std::size_t T = p.T;
  const std::size_t K = p.resolved_K(a, b);
  FineDistanceResult r;
  r.T = T;
  r.K = K;
  r.table.assign(T, std::vector<double>(K, 0.0));
  r.cell_exact.assign(T, std::vector<bool>(K, false));
  r.tail_bound = tail_bound(T);

  for (std::size_t k = 1; k <= K; ++k) {
    const bool feasible = exhaustive_feasible(a.atoms(), k, p.budget) && exhaustive_feasible(b.atoms(), k, p.budget);
    if (p.mode == Mode::exact && !feasible) {
      throw BudgetError(detail::budget_message(std::max(a.atoms(), b.atoms()), k, p.budget));
    }
    if (p.mode != Mode::heuristic && feasible) {
      // One enumeration at T; shorter word prefixes are projections.
      const CSet ca = enumerate_cset(a, T, k, p.budget);
      const CSet cb = enumerate_cset(b, T, k, p.budget);
      for (std::size_t t = 1; t <= T; ++t) {
        const CSet pa = project(ca, t);
        const CSet pb = project(cb, t);
        r.table[t - 1][k - 1] = std::max(directed_hausdorff(pa, pb).value, directed_hausdorff(pb, pa).value);
        r.cell_exact[t - 1][k - 1] = true;
      }
    } else {
      for (std::size_t t = 1; t <= T; ++t) {
        auto h = hausdorff(a, b, t, k, p.config_for(t, k), p.mode, p.budget);
        r.table[t - 1][k - 1] = h.value;
        r.cell_exact[t - 1][k - 1] = h.exact;
      }
    }
  }

  r.exact = true;
  for (std::size_t t = 1; t <= T; ++t) {
    double row = 0.0;
    for (std::size_t k = 1; k <= K; ++k) {
      row = std::max(row, r.table[t - 1][k - 1]);
      r.exact = r.exact && r.cell_exact[t - 1][k - 1];
    }
    r.value += std::ldexp(row, -static_cast<int>(t));
  }
  return r;
}

struct ContainmentWitness {
  std::size_t t = 0;
  std::size_t k = 0;
  /// Labelling of the contained action's atoms whose statistic is far from
  /// every statistic found for the containing action.
  std::vector<Label> labels;
  double distance = 0.0;
};

struct ContainmentResult {
  bool pass = true;
  /// When false some inner minimum came from heuristic search, so a FAIL may
  /// be spurious; a PASS is still sound because search distances are
  /// attained.
  bool exact = true;
  std::optional<ContainmentWitness> witness;
  /// Largest inner distance seen over all (t, k).
  double worst = 0.0;
};

/// Checks that every statistic point of `a` is within ε (L1) of a statistic
/// point of `b` for all t ≤ T, k ≤ K. The L1 condition on whole matrices
/// implies the per-entry condition at the same ε.
inline ContainmentResult weakly_contained(const MPAction& a, const MPAction& b, const TruncationParams& p, double eps) {
  p.validate();
  if (a.rank() != b.rank()) throw UsageError("actions have different ranks");
  const std::size_t T = p.T;
  const std::size_t K = p.resolved_K(a, b);
  ContainmentResult r;
  for (std::size_t k = 1; k <= K; ++k) {
    const bool fa = exhaustive_feasible(a.atoms(), k, p.budget);
    const bool fb = exhaustive_feasible(b.atoms(), k, p.budget);
    if (p.mode == Mode::exact && !(fa && fb)) {
      throw BudgetError(detail::budget_message(std::max(a.atoms(), b.atoms()), k, p.budget));
    }
    std::optional<CSet> cb_full;
    if (p.mode != Mode::heuristic && fb) cb_full = enumerate_cset(b, T, k, p.budget);
    for (std::size_t t = 1; t <= T; ++t) {
      const SearchConfig& cfg = p.config_for(t, k);
      const CSet ca = obtain_cset(a, t, k, cfg, p.mode, p.budget);
      DirectedResult d = cb_full ? directed_hausdorff(ca, project(*cb_full, t))
                                 : directed_hausdorff(ca, b, cfg, Mode::heuristic, p.budget);
      r.exact = r.exact && d.exact;
      r.worst = std::max(r.worst, d.value);
      if (d.value > eps && r.pass) {
        r.pass = false;
        r.witness = ContainmentWitness{t, k, d.from_witness, d.value};
      }
    }
  }
  return r;
}

struct EquivalenceResult {
  bool pass = false;
  ContainmentResult forward;   // a ≺ b
  ContainmentResult backward;  // b ≺ a
};

inline EquivalenceResult weakly_equivalent(const MPAction& a, const MPAction& b, const TruncationParams& p, double eps) {
  EquivalenceResult r;
  r.forward = weakly_contained(a, b, p, eps);
  r.backward = weakly_contained(b, a, p, eps);
  r.pass = r.forward.pass && r.backward.pass;
  return r;
}

}  // namespace weakeq
