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
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "weakeq/csets.hpp"
#include "weakeq/parallel.hpp"

namespace weakeq {

/// Componentwise action on the product space. Atom (i, j) has index
/// i * N_b + j.
inline MPAction product_action(const MPAction& a, const MPAction& b) {
  if (a.rank() != b.rank()) throw UsageError("product needs actions of the same rank");
  SpacePtr space = WeightedSpace::product(a.space(), b.space());
  std::vector<Permutation> gens;
  gens.reserve(a.generators().size());
  for (std::size_t g = 0; g < a.generators().size(); ++g) {
    Permutation p(space->size());
    for (Atom i = 0; i < a.atoms(); ++i) {
      for (Atom j = 0; j < b.atoms(); ++j) p[space->pair(i, j)] = space->pair(a.generators()[g][i], b.generators()[g][j]);
    }
    gens.push_back(std::move(p));
  }
  return MPAction(std::move(space), std::move(gens), std::max(a.cached_words(), b.cached_words()));
}

/// A partition of a product space whose blocks are unions of rectangles
/// left_i × right_j. assignment[i * q + j] is the label of rectangle (i, j);
/// each rectangle has exactly one label, so the label sets are disjoint and
/// cover p × q.
struct RectanglePartition {
  Partition left;
  Partition right;
  std::vector<Label> assignment;
  std::size_t k;

  RectanglePartition(Partition l, Partition r, std::vector<Label> asg, std::size_t k_)
      : left(std::move(l)), right(std::move(r)), assignment(std::move(asg)), k(k_) {
    if (assignment.size() != p() * q()) throw UsageError("rectangle assignment must cover p x q");
    for (Label x : assignment) {
      if (x >= k) throw UsageError("rectangle assigned a label outside 1..k");
    }
  }

  std::size_t p() const { return left.k(); }
  std::size_t q() const { return right.k(); }
  Label label_of(Label i, Label j) const { return assignment[i * q() + j]; }

  /// D_l = ⋃_{(i,j) ∈ I_l} left_i × right_j as a partition of the product
  /// space.
  Partition induced() const {
    SpacePtr space = WeightedSpace::product(left.space(), right.space());
    std::vector<Label> labels(space->size());
    for (Atom x = 0; x < left.space()->size(); ++x) {
      for (Atom y = 0; y < right.space()->size(); ++y) labels[space->pair(x, y)] = label_of(left.label(x), right.label(y));
    }
    return Partition(space, k, std::move(labels));
  }
};

/// Singleton factor blocks; the rectangle approximation error is 0.
inline RectanglePartition exact_rectangle_decomposition(const Partition& P) {
  const WeightedSpace& space = *P.space();
  if (!space.is_product()) throw UsageError("partition is not on a product space");
  Partition left = Partition::singletons(space.left_factor());
  Partition right = Partition::singletons(space.right_factor());
  std::vector<Label> asg(space.size());
  for (Atom x = 0; x < space.size(); ++x) asg[x] = P.label(x);  // row-major (i,j) is the atom index
  return RectanglePartition(std::move(left), std::move(right), std::move(asg), P.k());
}

/// Coarsest exact decomposition: left atoms are grouped by their row of
/// labels, right atoms by their column. Each side is padded with empty
/// blocks up to min_p and min_q.
inline RectanglePartition coarsest_rectangle_decomposition(const Partition& P, std::size_t min_p = 1,
                                                           std::size_t min_q = 1) {
  const WeightedSpace& space = *P.space();
  if (!space.is_product()) throw UsageError("partition is not on a product space");
  const std::size_t n = space.left_factor()->size();
  const std::size_t m = space.right_factor()->size();
  auto group = [&](std::size_t count, std::size_t other, auto atom_at) {
    std::map<std::vector<Label>, Label> ids;
    std::vector<Label> out(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<Label> row(other);
      for (std::size_t j = 0; j < other; ++j) row[j] = P.label(atom_at(i, j));
      out[i] = ids.try_emplace(std::move(row), static_cast<Label>(ids.size())).first->second;
    }
    return std::pair{out, ids.size()};
  };
  auto [lrow, p] = group(n, m, [&](std::size_t i, std::size_t j) { return space.pair(i, j); });
  auto [rcol, q] = group(m, n, [&](std::size_t j, std::size_t i) { return space.pair(i, j); });
  p = std::max(p, min_p);
  q = std::max(q, min_q);
  std::vector<Label> asg(p * q, 0);
  for (Atom x = 0; x < n; ++x) {
    for (Atom y = 0; y < m; ++y) asg[lrow[x] * q + rcol[y]] = P.label(space.pair(x, y));
  }
  return RectanglePartition(Partition(space.left_factor(), p, std::move(lrow)),
                            Partition(space.right_factor(), q, std::move(rcol)), std::move(asg), P.k());
}

/// B_l = A_l × Y: the pullback of a partition of the left factor.
inline RectanglePartition pullback_rectangles(const Partition& A, SpacePtr right_space) {
  std::vector<Label> asg(A.k());
  std::iota(asg.begin(), asg.end(), Label{0});
  return RectanglePartition(A, Partition::trivial(std::move(right_space)), std::move(asg), A.k());
}

/// μ(D_l △ A_l) for each label l, where D = R.induced().
inline std::vector<double> symmetric_difference_errors(const Partition& D, const Partition& A) {
  if (!same_space(D.space(), A.space()) || D.k() != A.k()) throw UsageError("partitions are not comparable");
  std::vector<double> err(A.k(), 0.0);
  for (Atom x = 0; x < A.space()->size(); ++x) {
    if (D.label(x) != A.label(x)) {
      err[D.label(x)] += A.space()->weight(x);
      err[A.label(x)] += A.space()->weight(x);
    }
  }
  return err;
}

struct CoarsenResult {
  RectanglePartition rectangles;
  /// max_l μ(D_l △ A_l) against the partition induced by the input.
  double error;
};

namespace detail {

/// Rectangle grid after grouping factor blocks. Each merged cell takes the
/// label carrying most of its mass; the error is max_l μ(D_l △ A_l).
struct GroupedGrid {
  const RectanglePartition* base;
  std::vector<double> left_mass;
  std::vector<double> right_mass;

  double cost(const std::vector<std::size_t>& lg, std::size_t lcount, const std::vector<std::size_t>& rg,
              std::size_t rcount, std::vector<Label>* cells = nullptr) const {
    const std::size_t k = base->k;
    std::vector<double> mass(lcount * rcount * k, 0.0);
    for (std::size_t i = 0; i < lg.size(); ++i) {
      for (std::size_t j = 0; j < rg.size(); ++j) {
        mass[(lg[i] * rcount + rg[j]) * k + base->label_of(static_cast<Label>(i), static_cast<Label>(j))] +=
            left_mass[i] * right_mass[j];
      }
    }
    std::vector<double> err(k, 0.0);
    if (cells) cells->assign(lcount * rcount, 0);
    for (std::size_t c = 0; c < lcount * rcount; ++c) {
      const double* m = &mass[c * k];
      Label best = 0;
      for (Label l = 1; l < k; ++l) {
        if (m[l] > m[best]) best = l;
      }
      for (Label l = 0; l < k; ++l) {
        if (l != best) {
          err[l] += m[l];
          err[best] += m[l];
        }
      }
      if (cells) (*cells)[c] = best;
    }
    return *std::max_element(err.begin(), err.end());
  }
};

/// Merges group `b` into group `a` (a < b) and renumbers densely.
inline std::vector<std::size_t> merge_groups(const std::vector<std::size_t>& g, std::size_t a, std::size_t b) {
  std::vector<std::size_t> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::size_t x = g[i] == b ? a : g[i];
    out[i] = x > b ? x - 1 : x;
  }
  return out;
}

}  // namespace detail

/// Exhaustive grouping search is used while S(p, p') · S(q, q') stays below
/// this (S = Stirling numbers of the second kind); greedy merging above it.
inline constexpr std::uint64_t kCoarsenExhaustiveLimit = 100000;

namespace detail {

/// S(n, c), saturating at `cap`.
inline std::uint64_t stirling2(std::size_t n, std::size_t c, std::uint64_t cap) {
  std::vector<std::uint64_t> row(c + 1, 0);
  row[0] = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = std::min(i, c); j >= 1; --j) row[j] = std::min(cap, row[j - 1] + j * row[j]);
    row[0] = 0;
  }
  return row[c];
}

/// Every grouping of n items into exactly c groups, as restricted growth
/// strings in lexicographic order.
inline void for_each_grouping(std::size_t n, std::size_t c, const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> g(n, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t used) {
    if (n - i < c - used) return;
    if (i == n) {
      fn(g);
      return;
    }
    for (std::size_t v = 0; v <= std::min(used, c - 1); ++v) {
      g[i] = v;
      rec(i + 1, std::max(used, v + 1));
    }
  };
  rec(0, 0);
}

}  // namespace detail

enum class CoarsenStrategy {
  automatic,   // exhaustive below kCoarsenExhaustiveLimit, greedy above
  greedy,
  exhaustive,  // throws BudgetError above kCoarsenExhaustiveLimit
};

/// Groups factor blocks so that p ≤ p_max and q ≤ q_max, minimising the
/// error over all groupings or by greedy pairwise merging (each step takes
/// the cheapest single merge, left merges first on ties).
inline CoarsenResult coarsen_rectangles(const RectanglePartition& R, std::size_t p_max, std::size_t q_max,
                                        CoarsenStrategy strategy = CoarsenStrategy::automatic) {
  if (p_max < 1 || q_max < 1) throw UsageError("p_max and q_max must be >= 1");
  detail::GroupedGrid grid{&R, {}, {}};
  for (Label i = 0; i < R.p(); ++i) grid.left_mass.push_back(R.left.block_weight(i));
  for (Label j = 0; j < R.q(); ++j) grid.right_mass.push_back(R.right.block_weight(j));

  std::vector<std::size_t> lg(R.p()), rg(R.q());
  std::iota(lg.begin(), lg.end(), std::size_t{0});
  std::iota(rg.begin(), rg.end(), std::size_t{0});
  std::size_t lc = std::min(R.p(), p_max), rc = std::min(R.q(), q_max);

  const std::uint64_t cap = kCoarsenExhaustiveLimit + 1;
  const std::uint64_t sl = detail::stirling2(R.p(), lc, cap), sr = detail::stirling2(R.q(), rc, cap);
  const bool small = sl * sr <= kCoarsenExhaustiveLimit;
  if (strategy == CoarsenStrategy::exhaustive && !small) {
    throw BudgetError("coarsening needs more than " + std::to_string(kCoarsenExhaustiveLimit) + " groupings");
  }
  if (strategy != CoarsenStrategy::greedy && small) {
    double best = std::numeric_limits<double>::infinity();
    detail::for_each_grouping(R.p(), lc, [&](const std::vector<std::size_t>& l) {
      detail::for_each_grouping(R.q(), rc, [&](const std::vector<std::size_t>& r) {
        const double c = grid.cost(l, lc, r, rc);
        if (c < best) {
          best = c;
          lg = l;
          rg = r;
        }
      });
    });
  } else {
    std::size_t cl = R.p(), cr = R.q();
    while (cl > p_max || cr > q_max) {
      double best = std::numeric_limits<double>::infinity();
      std::vector<std::size_t> best_lg, best_rg;
      if (cl > p_max) {
        for (std::size_t a = 0; a < cl; ++a) {
          for (std::size_t b = a + 1; b < cl; ++b) {
            auto cand = detail::merge_groups(lg, a, b);
            double c = grid.cost(cand, cl - 1, rg, cr);
            if (c < best) {
              best = c;
              best_lg = std::move(cand);
              best_rg.clear();
            }
          }
        }
      }
      if (cr > q_max) {
        for (std::size_t a = 0; a < cr; ++a) {
          for (std::size_t b = a + 1; b < cr; ++b) {
            auto cand = detail::merge_groups(rg, a, b);
            double c = grid.cost(lg, cl, cand, cr - 1);
            if (c < best) {
              best = c;
              best_rg = std::move(cand);
              best_lg.clear();
            }
          }
        }
      }
      if (!best_lg.empty()) {
        lg = std::move(best_lg);
        --cl;
      } else {
        rg = std::move(best_rg);
        --cr;
      }
    }
  }

  std::vector<Label> cells;
  const double error = grid.cost(lg, lc, rg, rc, &cells);
  auto regroup = [](const Partition& P, const std::vector<std::size_t>& g, std::size_t count) {
    std::vector<Label> labels(P.space()->size());
    for (Atom x = 0; x < labels.size(); ++x) labels[x] = static_cast<Label>(g[P.label(x)]);
    return Partition(P.space(), count, std::move(labels));
  };
  return {RectanglePartition(regroup(R.left, lg, lc), regroup(R.right, rg, rc), std::move(cells), R.k), error};
}

/// B_l = ⋃_{(i,j) ∈ I_l} E1_i × E2_j on the product of the replacement
/// spaces.
inline Partition transfer_partition(const RectanglePartition& R, const Partition& E1, const Partition& E2) {
  if (E1.k() != R.p()) throw UsageError("left replacement has " + std::to_string(E1.k()) + " blocks, expected " + std::to_string(R.p()));
  if (E2.k() != R.q()) throw UsageError("right replacement has " + std::to_string(E2.k()) + " blocks, expected " + std::to_string(R.q()));
  RectanglePartition moved(E1, E2, R.assignment, R.k);
  return moved.induced();
}

// ---------------------------------------------------------------------------
// Arithmetic lemma

struct LemmaResult {
  double lhs = 0.0;          // Σ_{i,j} |a_i c_j - b_i d_j|
  double sharpened = 0.0;    // Σ d_j Σ |a_i - b_i| + Σ a_i Σ |c_j - d_j|
  double row_bound = 0.0;    // δ Σ a_i + Σ |a_i - b_i|
  double two_delta = 0.0;    // 2δ
  bool holds = false;        // lhs ≤ sharpened ≤ row_bound ≤ 2δ
  bool strict = false;       // lhs < 2δ
};

/// Rounding slack for the non-strict comparisons.
inline constexpr double kLemmaSlack = 1e-12;

inline LemmaResult lemma_check(std::span<const double> a, std::span<const double> b, std::span<const double> c,
                                 std::span<const double> d, double delta) {
  if (a.size() != b.size() || c.size() != d.size() || a.empty() || c.empty()) {
    throw UsageError("lemma: a,b and c,d must be non-empty and of matching lengths");
  }
  auto in_unit = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0 && x <= 1.0; });
  };
  if (!in_unit(a) || !in_unit(b) || !in_unit(c) || !in_unit(d)) throw UsageError("lemma: entries must lie in [0,1]");
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sd = std::accumulate(d.begin(), d.end(), 0.0);
  if (std::abs(sa - 1.0) > 1e-9) throw UsageError("lemma: a must sum to 1");
  if (std::abs(sd - 1.0) > 1e-9) throw UsageError("lemma: d must sum to 1");
  double dab = 0.0, dcd = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dab += std::abs(a[i] - b[i]);
  for (std::size_t j = 0; j < c.size(); ++j) dcd += std::abs(c[j] - d[j]);
  if (!(dab < delta)) throw UsageError("lemma: sum |a - b| must be < delta");
  if (!(dcd < delta)) throw UsageError("lemma: sum |c - d| must be < delta");

  LemmaResult r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) r.lhs += std::abs(a[i] * c[j] - b[i] * d[j]);
  }
  r.two_delta = 2.0 * delta;
  r.sharpened = sd * dab + sa * dcd;
  r.row_bound = delta * sa + dab;
  r.holds = r.lhs <= r.sharpened + kLemmaSlack && r.sharpened <= r.row_bound + kLemmaSlack &&
            r.row_bound <= r.two_delta + kLemmaSlack;
  r.strict = r.lhs < r.two_delta;
  return r;
}

struct LemmaInstance {
  std::vector<double> a, b, c, d;
};

/// Random instance satisfying the lemma's hypotheses with strict margins:
/// a and d on the simplex, b and c perturbations of L1 size below δ.
inline LemmaInstance random_lemma_instance(Rng& rng, double delta, std::size_t max_len = 8) {
  auto simplex = [&](std::size_t n) {
    std::vector<double> v(n);
    double s = 0.0;
    for (auto& x : v) s += x = -std::log(1.0 - rng.uniform());
    for (auto& x : v) x /= s;
    return v;
  };
  auto perturb = [&](const std::vector<double>& base) {
    std::vector<double> e(base.size());
    double s = 0.0;
    for (auto& x : e) s += std::abs(x = rng.uniform() * 2.0 - 1.0);
    const double size = 0.999 * delta * rng.uniform();
    std::vector<double> out(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      out[i] = std::clamp(base[i] + (s > 0.0 ? e[i] / s * size : 0.0), 0.0, 1.0);
    }
    return out;
  };
  LemmaInstance inst;
  inst.a = simplex(1 + rng.index(max_len));
  inst.b = perturb(inst.a);
  inst.d = simplex(1 + rng.index(max_len));
  inst.c = perturb(inst.d);
  return inst;
}

// ---------------------------------------------------------------------------
// Product continuity probe

struct ProbeWitness {
  std::vector<Label> source;    // partition of a×b
  std::vector<Label> transfer;  // transferred partition of a'×b'
  double distance = 0.0;        // l1 between their statistics
  double factor_left = 0.0;     // l1(stat(a, D1), stat(a', E1))
  double factor_right = 0.0;    // l1(stat(b, D2), stat(b', E2))
  std::size_t p = 0;            // blocks of D1
  std::size_t q = 0;            // blocks of D2
};

struct ProbeReport {
  std::size_t t = 0;
  std::size_t k = 0;
  /// Truncated sup over block counts k' ≤ max(k, N) of the factor Hausdorff
  /// distances. Every witness is bounded by delta_a + delta_b.
  double delta_a = 0.0;
  double delta_b = 0.0;
  /// Factor Hausdorff distances at the probe's own k.
  double delta_a_at_k = 0.0;
  double delta_b_at_k = 0.0;
  double tolerance = 1e-9;
  double max_witness = 0.0;
  /// Each witness is within its factor sum and within delta_a + delta_b.
  bool holds = true;
  /// Each witness is within delta_a_at_k + delta_b_at_k.
  bool holds_at_k = true;
  std::size_t witnesses_over_at_k = 0;
  std::vector<ProbeWitness> witnesses;
};

namespace detail {
inline double truncated_sup_hausdorff(const MPAction& x, const MPAction& y, std::size_t t, std::size_t k_max,
                                      std::uint64_t budget, double* at_k, std::size_t k) {
  double sup = 0.0;
  for (std::size_t kk = 1; kk <= k_max; ++kk) {
    const CSet cx = enumerate_cset(x, t, kk, budget);
    const CSet cy = enumerate_cset(y, t, kk, budget);
    const double h = std::max(directed_hausdorff(cx, cy).value, directed_hausdorff(cy, cx).value);
    if (kk == k) *at_k = h;
    sup = std::max(sup, h);
  }
  return sup;
}
}  // namespace detail

/// For every statistic point of a×b, builds transferred partitions of a'×b'
/// from two exact rectangle decompositions (singleton blocks and the coarsest
/// one padded to k blocks per side), replacing each factor partition by the
/// nearest point of the matching C-set of a' or b'. The closer transfer is
/// kept.
inline ProbeReport product_continuity_probe(const MPAction& a, const MPAction& a2, const MPAction& b,
                                            const MPAction& b2, std::size_t t, std::size_t k,
                                            std::uint64_t budget = kDefaultBudget, double tolerance = 1e-9) {
  if (a.rank() != a2.rank() || a.rank() != b.rank() || b.rank() != b2.rank()) {
    throw UsageError("probe needs four actions of the same rank");
  }
  const std::size_t p = a.atoms();
  const std::size_t q = b.atoms();
  for (auto [n, kk] : {std::pair{p * q, k}, std::pair{a2.atoms(), std::max(k, p)}, std::pair{p, std::max(k, p)},
                       std::pair{b2.atoms(), std::max(k, q)}, std::pair{q, std::max(k, q)}}) {
    if (!exhaustive_feasible(n, kk, budget)) throw BudgetError(detail::budget_message(n, kk, budget));
  }

  const MPAction ab = product_action(a, b).with_words(t);
  const MPAction ab2 = product_action(a2, b2).with_words(t);
  const MPAction aw = a.with_words(t), a2w = a2.with_words(t), bw = b.with_words(t), b2w = b2.with_words(t);

  ProbeReport r;
  r.t = t;
  r.k = k;
  r.tolerance = tolerance;
  r.delta_a = detail::truncated_sup_hausdorff(aw, a2w, t, std::max(k, p), budget, &r.delta_a_at_k, k);
  r.delta_b = detail::truncated_sup_hausdorff(bw, b2w, t, std::max(k, q), budget, &r.delta_b_at_k, k);

  // Target C-sets indexed by block count.
  std::vector<CSet> left_sets(std::max(k, p) + 1), right_sets(std::max(k, q) + 1);
  for (std::size_t c = 1; c < left_sets.size(); ++c) left_sets[c] = enumerate_cset(a2w, t, c, budget);
  for (std::size_t c = 1; c < right_sets.size(); ++c) right_sets[c] = enumerate_cset(b2w, t, c, budget);

  const CSet source = enumerate_cset(ab, t, k, budget);
  r.witnesses.resize(source.size());
  parallel_for(source.size(), [&](std::size_t i) {
    const Partition P(ab.space(), k, source.witnesses[i]);
    ProbeWitness& w = r.witnesses[i];
    w.source = source.witnesses[i];
    w.distance = std::numeric_limits<double>::infinity();
    for (const RectanglePartition& R : {exact_rectangle_decomposition(P), coarsest_rectangle_decomposition(P, k, k)}) {
      const ClosestResult E1 = closest_in(stat_point(aw, R.left, t), left_sets[R.p()]);
      const ClosestResult E2 = closest_in(stat_point(bw, R.right, t), right_sets[R.q()]);
      const Partition B =
          transfer_partition(R, Partition(a2.space(), R.p(), E1.labels), Partition(b2.space(), R.q(), E2.labels));
      const double d = l1_distance(source.points[i], stat_point(ab2, B, t));
      if (d < w.distance) {
        w.distance = d;
        w.transfer.assign(B.labels().begin(), B.labels().end());
        w.factor_left = E1.distance;
        w.factor_right = E2.distance;
        w.p = R.p();
        w.q = R.q();
      }
    }
  });
  for (const auto& w : r.witnesses) {
    r.max_witness = std::max(r.max_witness, w.distance);
    r.holds = r.holds && w.distance <= w.factor_left + w.factor_right + tolerance &&
              w.distance <= r.delta_a + r.delta_b + tolerance;
    if (w.distance > r.delta_a_at_k + r.delta_b_at_k + tolerance) ++r.witnesses_over_at_k;
  }
  r.holds_at_k = r.witnesses_over_at_k == 0;
  return r;
}

}  // namespace weakeq
