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
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "weakeq/core.hpp"
#include "weakeq/parallel.hpp"
#include "weakeq/statistics.hpp"

namespace weakeq {

inline constexpr std::uint64_t kDefaultBudget = std::uint64_t{1} << 24;
inline constexpr double kDedupTolerance = 1e-12;

struct SearchConfig {
  std::uint64_t seed = 0;
  std::size_t restarts = 8;
  std::size_t max_steps = 2000;
  double initial_temperature = 0.25;
  double decay = 0.997;
  std::size_t sample_count = 32;

  void validate() const {
    if (restarts < 1 || max_steps < 1 || sample_count < 1) {
      throw UsageError("search config: restarts, max_steps and sample_count must be positive");
    }
    if (!(initial_temperature > 0.0)) throw UsageError("search config: initial temperature must be positive");
    if (!(decay > 0.0 && decay < 1.0)) throw UsageError("search config: decay must lie in (0,1)");
  }
};

/// How inner and outer sets are obtained.
enum class Mode {
  automatic,  // exhaustive where k^N fits the budget, heuristic otherwise
  exact,      // exhaustive or BudgetError
  heuristic,  // never enumerate
};

struct Provenance {
  enum class Kind { enumeration, search };
  Kind kind = Kind::enumeration;
  std::uint64_t seed = 0;
  std::uint64_t budget = 0;

  std::string to_string() const {
    if (kind == Kind::enumeration) return "enumeration";
    return "search(seed=" + std::to_string(seed) + ", budget=" + std::to_string(budget) + ")";
  }
};

/// Finite set of statistic points, each with one labelling attaining it.
/// When `exact` is set the points are the statistics of all k^N labellings,
/// deduplicated.
struct CSet {
  std::size_t t = 0;
  std::size_t k = 0;
  std::vector<StatPoint> points;
  std::vector<std::vector<Label>> witnesses;
  bool exact = false;
  Provenance provenance;

  std::size_t size() const { return points.size(); }
};

/// k^N if it does not exceed `budget`, otherwise nullopt.
inline std::optional<std::uint64_t> labelling_count(std::size_t atoms, std::size_t k, std::uint64_t budget) {
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < atoms; ++i) {
    if (k > 1 && count > budget / k) return std::nullopt;
    count *= k;
  }
  if (count > budget) return std::nullopt;
  return count;
}

inline bool exhaustive_feasible(std::size_t atoms, std::size_t k, std::uint64_t budget) {
  return labelling_count(atoms, k, budget).has_value();
}

namespace detail {

using PointKey = std::vector<std::int64_t>;

inline PointKey point_key(const StatPoint& p) {
  PointKey key(p.values.size());
  for (std::size_t i = 0; i < key.size(); ++i) key[i] = std::llround(p.values[i] / kDedupTolerance);
  return key;
}

/// Deduplicating accumulator; iteration order is key order, so the result is
/// independent of the order points were inserted in.
class PointSet {
 public:
  /// Returns true when `p` opened a new class.
  bool insert(const StatPoint& p, std::span<const Label> witness) {
    auto [it, fresh] = index_.try_emplace(point_key(p), points_.size());
    if (fresh) {
      points_.push_back(p);
      witnesses_.emplace_back(witness.begin(), witness.end());
    }
    return fresh;
  }

  void replace_last(const StatPoint& p) { points_.back() = p; }

  void drain_into(CSet& out) {
    out.points.reserve(index_.size());
    out.witnesses.reserve(index_.size());
    for (const auto& [key, i] : index_) {
      out.points.push_back(std::move(points_[i]));
      out.witnesses.push_back(std::move(witnesses_[i]));
    }
    index_.clear();
    points_.clear();
    witnesses_.clear();
  }

 private:
  std::map<PointKey, std::size_t> index_;
  std::vector<StatPoint> points_;
  std::vector<std::vector<Label>> witnesses_;
};

inline std::string budget_message(std::size_t atoms, std::size_t k, std::uint64_t budget) {
  return "exhaustive enumeration needs k^N = " + std::to_string(k) + "^" + std::to_string(atoms) +
         " labellings, which exceeds the budget of " + std::to_string(budget);
}

}  // namespace detail

/// Statistics of every labelling of the atoms into k blocks (empty blocks
/// included), deduplicated within kDedupTolerance.
inline CSet enumerate_cset(const MPAction& action, std::size_t t, std::size_t k, std::uint64_t budget = kDefaultBudget) {
  if (k < 1) throw UsageError("k must be >= 1");
  const MPAction a = action.with_words(t);
  const std::size_t n = a.atoms();
  auto count = labelling_count(n, k, budget);
  if (!count) throw BudgetError(detail::budget_message(n, k, budget));

  detail::PointSet set;
  StatTracker tracker(a, t, k, std::vector<Label>(n, 0));
  set.insert(tracker.stat(), tracker.labels());
  std::uint64_t moves = 0;
  for (std::uint64_t step = 1; step < *count; ++step) {
    // Odometer increment, atom 0 fastest.
    for (Atom x = 0; x < n; ++x) {
      const Label next = tracker.labels()[x] + 1;
      if (next < k) {
        tracker.relabel(x, next);
        ++moves;
        break;
      }
      tracker.relabel(x, 0);
      ++moves;
    }
    if (moves >= 1024) {
      tracker.resync();
      moves = 0;
    }
    if (set.insert(tracker.stat(), tracker.labels())) {
      // Stored points are drift-free, so witnesses reproduce them exactly.
      tracker.resync();
      moves = 0;
      set.replace_last(tracker.stat());
    }
  }

  CSet out;
  out.t = t;
  out.k = k;
  out.exact = true;
  out.provenance = {Provenance::Kind::enumeration, 0, budget};
  set.drain_into(out);
  return out;
}

/// Restriction of every point to its first `t` word slices, deduplicated.
inline CSet project(const CSet& c, std::size_t t) {
  if (t > c.t) throw UsageError("cannot project a C-set to more words than it has");
  if (t == c.t) return c;
  detail::PointSet set;
  for (std::size_t i = 0; i < c.points.size(); ++i) set.insert(c.points[i].prefix(t), c.witnesses[i]);
  CSet out;
  out.t = t;
  out.k = c.k;
  out.exact = c.exact;
  out.provenance = c.provenance;
  set.drain_into(out);
  return out;
}

/// Labellings with structure that random sampling tends to miss: constant
/// labellings, weight-quantile blocks, orbit-based blocks and a staircase.
inline std::vector<std::vector<Label>> structured_labellings(const MPAction& a, std::size_t k) {
  const std::size_t n = a.atoms();
  const WeightedSpace& space = *a.space();
  std::vector<std::vector<Label>> out;
  for (Label l = 0; l < k; ++l) out.emplace_back(n, l);

  std::vector<Atom> by_weight(n);
  std::iota(by_weight.begin(), by_weight.end(), Atom{0});
  std::stable_sort(by_weight.begin(), by_weight.end(),
                   [&](Atom x, Atom y) { return space.weight(x) < space.weight(y); });
  {
    std::vector<Label> q(n);
    double before = 0.0;
    for (Atom x : by_weight) {
      q[x] = static_cast<Label>(std::min<double>(static_cast<double>(k - 1), std::floor(before * static_cast<double>(k))));
      before += space.weight(x);
    }
    out.push_back(std::move(q));
  }

  // Orbits of the generated group, by union-find over generator edges.
  std::vector<Atom> root(n);
  std::iota(root.begin(), root.end(), Atom{0});
  auto find = [&](Atom x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (const auto& g : a.generators()) {
    for (Atom x = 0; x < n; ++x) {
      Atom rx = find(x);
      Atom ry = find(g[x]);
      if (rx != ry) root[std::max(rx, ry)] = std::min(rx, ry);
    }
  }
  std::map<Atom, Label> orbit_index;
  std::vector<Label> by_orbit(n);
  for (Atom x = 0; x < n; ++x) {
    auto [it, fresh] = orbit_index.try_emplace(find(x), static_cast<Label>(orbit_index.size()));
    by_orbit[x] = it->second % k;
  }
  out.push_back(std::move(by_orbit));

  std::vector<Label> stair(n);
  for (Atom x = 0; x < n; ++x) stair[x] = static_cast<Label>(std::min<std::size_t>(x, k - 1));
  out.push_back(std::move(stair));
  return out;
}

/// Heuristic outer set: statistics of `cfg.sample_count` seeded random
/// labellings plus structured_labellings(), deduplicated.
inline CSet sample_cset(const MPAction& action, std::size_t t, std::size_t k, const SearchConfig& cfg) {
  cfg.validate();
  const MPAction a = action.with_words(t);
  const std::size_t n = a.atoms();
  detail::PointSet set;
  auto add = [&](const std::vector<Label>& labels) {
    set.insert(stat_point(a, Partition(a.space(), k, labels), t), labels);
  };
  for (const auto& labels : structured_labellings(a, k)) add(labels);
  for (std::size_t i = 0; i < cfg.sample_count; ++i) {
    Rng rng(stream_seed(cfg.seed ^ 0x5a5a5a5aULL, i));
    std::vector<Label> labels(n);
    for (auto& l : labels) l = static_cast<Label>(rng.index(k));
    add(labels);
  }
  CSet out;
  out.t = t;
  out.k = k;
  out.exact = false;
  out.provenance = {Provenance::Kind::search, cfg.seed, cfg.sample_count};
  set.drain_into(out);
  return out;
}

/// C-set according to `mode`: exhaustive when permitted and feasible,
/// otherwise the heuristic sample.
inline CSet obtain_cset(const MPAction& a, std::size_t t, std::size_t k, const SearchConfig& cfg, Mode mode,
                        std::uint64_t budget = kDefaultBudget) {
  const bool feasible = exhaustive_feasible(a.atoms(), k, budget);
  if (mode == Mode::exact && !feasible) throw BudgetError(detail::budget_message(a.atoms(), k, budget));
  if (mode != Mode::heuristic && feasible) return enumerate_cset(a, t, k, budget);
  return sample_cset(a, t, k, cfg);
}

struct ClosestResult {
  std::vector<Label> labels;
  double distance = std::numeric_limits<double>::infinity();
  /// True when the distance is the true minimum over all labellings.
  bool exact = false;
};

namespace detail {

/// L1 change over the touched cells of `now` relative to the values they
/// had before a move (`before` holds indices and old values).
inline double touched_delta(const StatPoint& now, const StatPoint& target,
                            const std::vector<std::pair<std::size_t, double>>& before) {
  double delta = 0.0;
  for (const auto& [idx, old] : before) {
    delta += std::abs(now.values[idx] - target.values[idx]) - std::abs(old - target.values[idx]);
  }
  return delta;
}

/// One annealing run followed by first-improvement hill climbing. Moves are
/// single-atom relabels and label swaps between two atoms; the swaps let the
/// search trade mass between blocks without an uphill intermediate step.
inline ClosestResult anneal_once(const StatPoint& target, const MPAction& a, const SearchConfig& cfg, Rng& rng) {
  const std::size_t n = a.atoms();
  const std::size_t k = target.k;
  std::vector<Label> start(n);
  for (auto& l : start) l = static_cast<Label>(rng.index(k));
  StatTracker tracker(a, target.t, k, std::move(start));
  double current = l1_distance(tracker.stat(), target);
  ClosestResult best{tracker.labels(), current, false};

  std::vector<std::size_t> touched;
  std::vector<std::pair<std::size_t, double>> before;
  auto remember = [&]() {
    for (std::size_t idx : touched) {
      bool seen = false;
      for (const auto& b : before) seen = seen || b.first == idx;
      if (!seen) before.emplace_back(idx, tracker.stat().values[idx]);
    }
    touched.clear();
  };
  // Applies the move and returns the exact change in distance.
  auto try_move = [&](Atom x, Label to) {
    touched.clear();
    before.clear();
    tracker.cells_touched(x, to, touched);
    remember();
    tracker.relabel(x, to);
    return touched_delta(tracker.stat(), target, before);
  };
  // Exchanges the labels of x and y (which must differ).
  auto try_swap = [&](Atom x, Atom y) {
    const Label lx = tracker.labels()[x], ly = tracker.labels()[y];
    touched.clear();
    before.clear();
    tracker.cells_touched(x, ly, touched);
    remember();
    tracker.relabel(x, ly);
    tracker.cells_touched(y, lx, touched);
    remember();
    tracker.relabel(y, lx);
    return touched_delta(tracker.stat(), target, before);
  };
  auto undo_swap = [&](Atom x, Atom y) {
    const Label lx = tracker.labels()[x], ly = tracker.labels()[y];
    tracker.relabel(x, ly);
    tracker.relabel(y, lx);
  };

  if (k > 1) {
    std::vector<Atom> order(n);
    std::iota(order.begin(), order.end(), Atom{0});
    // Distances scale with the number of word slices.
    double temperature = cfg.initial_temperature * static_cast<double>(target.t);
    std::size_t moves_since_sync = 0;
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
      if (step % n == 0) rng.shuffle(order);
      const Atom x = order[step % n];
      const Label from = tracker.labels()[x];
      const Atom y = static_cast<Atom>(rng.index(n));
      const bool swap = rng.index(2) == 0 && tracker.labels()[y] != from;
      double delta;
      Label to = 0;
      if (swap) {
        delta = try_swap(x, y);
      } else {
        to = static_cast<Label>(rng.index(k - 1));
        if (to >= from) ++to;
        delta = try_move(x, to);
      }
      if (delta <= 0.0 || rng.uniform() < std::exp(-delta / temperature)) {
        current += delta;
        if (++moves_since_sync >= 256) {
          tracker.resync();
          current = l1_distance(tracker.stat(), target);
          moves_since_sync = 0;
        }
        if (current < best.distance) best = {tracker.labels(), current, false};
      } else if (swap) {
        undo_swap(x, y);
      } else {
        tracker.relabel(x, from);
      }
      temperature *= cfg.decay;
    }

    // Hill climb from the best labelling seen.
    tracker = StatTracker(a, target.t, k, best.labels);
    current = l1_distance(tracker.stat(), target);
    std::vector<Label> label_order(k);
    std::iota(label_order.begin(), label_order.end(), Label{0});
    bool improved = true;
    while (improved) {
      improved = false;
      rng.shuffle(order);
      for (Atom x : order) {
        rng.shuffle(label_order);
        const Label from = tracker.labels()[x];
        for (Label to : label_order) {
          if (to == from) continue;
          const double delta = try_move(x, to);
          if (delta < -1e-15) {
            current += delta;
            improved = true;
            break;
          }
          tracker.relabel(x, from);
        }
      }
      if (improved) continue;
      for (std::size_t i = 0; i < n && !improved; ++i) {
        for (std::size_t j = i + 1; j < n && !improved; ++j) {
          const Atom x = order[i], y = order[j];
          if (tracker.labels()[x] == tracker.labels()[y]) continue;
          const double delta = try_swap(x, y);
          if (delta < -1e-15) {
            current += delta;
            improved = true;
          } else {
            undo_swap(x, y);
          }
        }
      }
    }
  }
  tracker.resync();
  current = l1_distance(tracker.stat(), target);
  if (current <= best.distance) best = {tracker.labels(), current, false};
  // Recompute the reported distance from scratch so it is an attained value.
  best.distance = l1_distance(stat_point(a, Partition(a.space(), k, best.labels), target.t), target);
  return best;
}

}  // namespace detail

/// Heuristic nearest labelling of `a` to `target`: multi-restart annealing
/// over single-atom relabel moves, then hill climbing. The distance is
/// attained by the returned labelling, so it bounds the true minimum from
/// above.
inline ClosestResult closest_point(const StatPoint& target, const MPAction& action, const SearchConfig& cfg) {
  cfg.validate();
  const MPAction a = action.with_words(target.t);
  if (a.atoms() == 1 || target.k == 1) {
    // Only k labellings for one atom; only one labelling for one block.
    ClosestResult best;
    for (Label l = 0; l < target.k && (a.atoms() == 1 || l == 0); ++l) {
      std::vector<Label> labels(a.atoms(), l);
      double d = l1_distance(stat_point(a, Partition(a.space(), target.k, labels), target.t), target);
      if (d < best.distance) best = {labels, d, true};
    }
    return best;
  }
  std::vector<ClosestResult> runs(cfg.restarts);
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    Rng rng(stream_seed(cfg.seed, r));
    runs[r] = detail::anneal_once(target, a, cfg, rng);
    if (runs[r].distance == 0.0) {
      runs.resize(r + 1);
      break;
    }
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].distance < runs[best].distance) best = r;
  }
  return runs[best];
}

/// Exact nearest point of `to` (which must be an exact C-set for this to be
/// the true minimum).
inline ClosestResult closest_in(const StatPoint& target, const CSet& to) {
  if (target.t != to.t || target.k != to.k) throw UsageError("shape mismatch between target and C-set");
  ClosestResult best;
  for (std::size_t j = 0; j < to.points.size(); ++j) {
    double d = l1_distance_bounded(target, to.points[j], best.distance);
    if (d < best.distance) {
      best.distance = d;
      best.labels = to.witnesses[j];
    }
  }
  best.exact = to.exact;
  return best;
}

struct DirectedResult {
  double value = 0.0;
  bool exact = false;
  /// The outer point with the largest inner distance and a labelling of the
  /// target action attaining that inner distance.
  std::size_t from_index = 0;
  std::vector<Label> from_witness;
  std::vector<Label> to_witness;
  /// Inner distance for every outer point, in outer-set order.
  std::vector<double> inner;
};

namespace detail {
inline DirectedResult reduce_directed(const CSet& from, std::vector<ClosestResult> inner, bool exact) {
  DirectedResult r;
  r.exact = exact;
  r.inner.reserve(inner.size());
  for (std::size_t i = 0; i < inner.size(); ++i) {
    r.inner.push_back(inner[i].distance);
    if (i == 0 || inner[i].distance > r.value) {
      r.value = inner[i].distance;
      r.from_index = i;
      r.from_witness = from.witnesses[i];
      r.to_witness = inner[i].labels;
    }
  }
  return r;
}
}  // namespace detail

/// max over points of `from` of min over points of `to`.
inline DirectedResult directed_hausdorff(const CSet& from, const CSet& to) {
  if (from.t != to.t || from.k != to.k) throw UsageError("C-sets have different shapes");
  if (from.points.empty()) throw UsageError("outer C-set is empty");
  std::vector<ClosestResult> inner(from.points.size());
  parallel_for(from.points.size(), [&](std::size_t i) { inner[i] = closest_in(from.points[i], to); });
  return detail::reduce_directed(from, std::move(inner), from.exact && to.exact);
}

/// Directed distance from `from` into the partition space of `to`. The inner
/// minimum is exhaustive when `mode` allows and k^N fits the budget; otherwise
/// each outer point gets its own seeded search, so the result is an upper
/// bound on every inner minimum.
inline DirectedResult directed_hausdorff(const CSet& from, const MPAction& to, const SearchConfig& cfg,
                                         Mode mode = Mode::automatic, std::uint64_t budget = kDefaultBudget) {
  cfg.validate();
  const bool feasible = exhaustive_feasible(to.atoms(), from.k, budget);
  if (mode == Mode::exact && !feasible) throw BudgetError(detail::budget_message(to.atoms(), from.k, budget));
  if (mode != Mode::heuristic && feasible) return directed_hausdorff(from, enumerate_cset(to, from.t, from.k, budget));
  if (from.points.empty()) throw UsageError("outer C-set is empty");
  const MPAction target_action = to.with_words(from.t);
  std::vector<ClosestResult> inner(from.points.size());
  parallel_for(from.points.size(), [&](std::size_t i) {
    SearchConfig local = cfg;
    local.seed = stream_seed(cfg.seed, i);
    inner[i] = closest_point(from.points[i], target_action, local);
  });
  return detail::reduce_directed(from, std::move(inner), false);
}

struct HausdorffResult {
  double value = 0.0;
  bool exact = false;
  DirectedResult forward;   // C(a) into b
  DirectedResult backward;  // C(b) into a
};

inline HausdorffResult hausdorff(const MPAction& a, const MPAction& b, std::size_t t, std::size_t k,
                                 const SearchConfig& cfg, Mode mode = Mode::automatic,
                                 std::uint64_t budget = kDefaultBudget) {
  if (a.rank() != b.rank()) throw UsageError("actions have different ranks");
  const bool fa = exhaustive_feasible(a.atoms(), k, budget);
  const bool fb = exhaustive_feasible(b.atoms(), k, budget);
  HausdorffResult r;
  if (mode != Mode::heuristic && fa && fb) {
    CSet ca = enumerate_cset(a, t, k, budget);
    CSet cb = enumerate_cset(b, t, k, budget);
    r.forward = directed_hausdorff(ca, cb);
    r.backward = directed_hausdorff(cb, ca);
  } else {
    if (mode == Mode::exact) {
      throw BudgetError(detail::budget_message(std::max(a.atoms(), b.atoms()), k, budget));
    }
    CSet ca = obtain_cset(a, t, k, cfg, mode, budget);
    CSet cb = obtain_cset(b, t, k, cfg, mode, budget);
    r.forward = directed_hausdorff(ca, b, cfg, mode, budget);
    r.backward = directed_hausdorff(cb, a, cfg, mode, budget);
  }
  r.value = std::max(r.forward.value, r.backward.value);
  r.exact = r.forward.exact && r.backward.exact;
  return r;
}

}  // namespace weakeq
