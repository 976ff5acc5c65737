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
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "weakeq/core.hpp"
#include "weakeq/metric.hpp"
#include "weakeq/parallel.hpp"
#include "weakeq/products.hpp"

namespace weakeq {

// ---------------------------------------------------------------------------
// Finite groups

/// Multiplication table of a finite group on elements 0..n-1, together with
/// the elements that play the role of the free generators g_1..g_r.
class FiniteGroupTable {
 public:
  FiniteGroupTable(std::vector<std::vector<std::size_t>> table, std::vector<std::size_t> generators)
      : table_(std::move(table)), generators_(std::move(generators)) {
    validate();
  }

  std::size_t order() const { return table_.size(); }
  std::size_t mul(std::size_t x, std::size_t y) const { return table_[x][y]; }
  std::size_t identity() const { return identity_; }
  std::size_t inverse(std::size_t x) const { return inverse_[x]; }
  const std::vector<std::size_t>& generators() const { return generators_; }

  static FiniteGroupTable cyclic(std::size_t n) {
    std::vector<std::vector<std::size_t>> t(n, std::vector<std::size_t>(n));
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < n; ++y) t[x][y] = (x + y) % n;
    }
    return FiniteGroupTable(std::move(t), {n > 1 ? std::size_t{1} : std::size_t{0}});
  }

  /// S_3 as permutations of {0,1,2}, generated by a transposition and a
  /// 3-cycle.
  static FiniteGroupTable symmetric3() {
    std::vector<std::array<int, 3>> perms;
    std::array<int, 3> p{0, 1, 2};
    do perms.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    auto index = [&](const std::array<int, 3>& q) {
      return static_cast<std::size_t>(std::find(perms.begin(), perms.end(), q) - perms.begin());
    };
    std::vector<std::vector<std::size_t>> t(6, std::vector<std::size_t>(6));
    for (std::size_t x = 0; x < 6; ++x) {
      for (std::size_t y = 0; y < 6; ++y) {
        std::array<int, 3> r{};
        for (int i = 0; i < 3; ++i) r[i] = perms[x][perms[y][i]];
        t[x][y] = index(r);
      }
    }
    return FiniteGroupTable(std::move(t), {index({1, 0, 2}), index({1, 2, 0})});
  }

  static FiniteGroupTable named(const std::string& name) {
    if (name == "z1") return cyclic(1);
    if (name == "z2") return cyclic(2);
    if (name == "z3") return cyclic(3);
    if (name == "z4") return cyclic(4);
    if (name == "s3") return symmetric3();
    throw UsageError("unknown group '" + name + "' (expected z1, z2, z3, z4 or s3)");
  }

 private:
  void validate() {
    const std::size_t n = table_.size();
    if (n < 1 || n > 64) throw UsageError("group order must be in 1..64");
    for (const auto& row : table_) {
      if (row.size() != n) throw UsageError("group table is not square");
      for (std::size_t v : row) {
        if (v >= n) throw UsageError("group table entry out of range");
      }
    }
    std::optional<std::size_t> e;
    for (std::size_t x = 0; x < n && !e; ++x) {
      bool ok = true;
      for (std::size_t y = 0; y < n && ok; ++y) ok = table_[x][y] == y && table_[y][x] == y;
      if (ok) e = x;
    }
    if (!e) throw UsageError("group table has no identity");
    identity_ = *e;
    inverse_.assign(n, n);
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < n; ++y) {
        if (table_[x][y] == identity_ && table_[y][x] == identity_) inverse_[x] = y;
      }
      if (inverse_[x] == n) throw UsageError("group element " + std::to_string(x) + " has no inverse");
    }
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t z = 0; z < n; ++z) {
          if (table_[table_[x][y]][z] != table_[x][table_[y][z]]) throw UsageError("group table is not associative");
        }
      }
    }
    if (generators_.empty()) throw UsageError("group needs at least one generator");
    std::vector<char> reached(n, 0);
    std::vector<std::size_t> frontier{identity_};
    reached[identity_] = 1;
    while (!frontier.empty()) {
      std::size_t x = frontier.back();
      frontier.pop_back();
      for (std::size_t g : generators_) {
        if (g >= n) throw UsageError("generator out of range");
        std::size_t y = table_[g][x];
        if (!reached[y]) {
          reached[y] = 1;
          frontier.push_back(y);
        }
      }
    }
    if (std::count(reached.begin(), reached.end(), 1) != static_cast<std::ptrdiff_t>(n)) {
      throw UsageError("generators do not generate the group");
    }
  }

  std::vector<std::vector<std::size_t>> table_;
  std::vector<std::size_t> generators_;
  std::size_t identity_ = 0;
  std::vector<std::size_t> inverse_;
};

inline constexpr std::size_t kDefaultAtomBudget = std::size_t{1} << 16;

/// Translation action on functions G → {0..m-1} with product measure:
/// (g·f)(h) = f(g^{-1} h). Function f is encoded as Σ_h f(h)·m^h.
inline MPAction bernoulli_shift(const FiniteGroupTable& G, const std::vector<double>& base_weights,
                                std::size_t atom_budget = kDefaultAtomBudget) {
  const std::size_t m = base_weights.size();
  if (m < 2) throw UsageError("Bernoulli base needs at least 2 points");
  const std::size_t n = G.order();
  std::size_t atoms = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (atoms > atom_budget / m) {
      throw BudgetError("Bernoulli shift needs m^|G| = " + std::to_string(m) + "^" + std::to_string(n) +
                        " atoms, exceeding the budget of " + std::to_string(atom_budget));
    }
    atoms *= m;
  }
  // Validates the base measure.
  WeightedSpace base(base_weights);

  std::vector<std::size_t> pow(n, 1);
  for (std::size_t h = 1; h < n; ++h) pow[h] = pow[h - 1] * m;
  // Multiply factors in sorted order so translates of a function, which
  // carry the same multiset of factors, get bit-identical weights.
  std::vector<double> weights(atoms);
  for (std::size_t f = 0; f < atoms; ++f) {
    std::vector<double> factors(n);
    for (std::size_t h = 0; h < n; ++h) factors[h] = base.weight(static_cast<Atom>((f / pow[h]) % m));
    std::sort(factors.begin(), factors.end());
    double w = 1.0;
    for (double x : factors) w *= x;
    weights[f] = w;
  }
  auto space = std::make_shared<const WeightedSpace>(std::move(weights));

  std::vector<Permutation> gens;
  for (std::size_t g : G.generators()) {
    const std::size_t ginv = G.inverse(g);
    Permutation p(atoms);
    for (std::size_t f = 0; f < atoms; ++f) {
      std::size_t image = 0;
      for (std::size_t h = 0; h < n; ++h) {
        const std::size_t value = (f / pow[G.mul(ginv, h)]) % m;
        image += value * pow[h];
      }
      p[f] = static_cast<Atom>(image);
    }
    gens.push_back(std::move(p));
  }
  return make_action(std::move(space), std::move(gens));
}

/// Disjoint union: a's atoms reweighted by (1-λ), then c's atoms by λ.
inline MPAction mixture(const MPAction& a, const MPAction& c, double lambda) {
  if (a.rank() != c.rank()) throw UsageError("mixture needs actions of the same rank");
  if (!(lambda > 0.0 && lambda < 1.0)) throw UsageError("mixture weight must lie in (0,1)");
  std::vector<double> w;
  for (double x : a.space()->weights()) w.push_back((1.0 - lambda) * x);
  for (double x : c.space()->weights()) w.push_back(lambda * x);
  const Atom offset = static_cast<Atom>(a.atoms());
  std::vector<Permutation> gens;
  for (std::size_t g = 0; g < a.generators().size(); ++g) {
    Permutation p = a.generators()[g];
    for (Atom y : c.generators()[g]) p.push_back(y + offset);
    gens.push_back(std::move(p));
  }
  return make_action(std::make_shared<const WeightedSpace>(std::move(w)), std::move(gens),
                     std::max(a.cached_words(), c.cached_words()));
}

/// Generator images σ∘π∘σ^{-1}.
inline MPAction conjugate(const MPAction& a, const Permutation& sigma) {
  const WeightedSpace& space = *a.space();
  if (sigma.size() != a.atoms() || !is_bijection(sigma)) throw UsageError("conjugator is not a permutation of the atoms");
  for (Atom x = 0; x < sigma.size(); ++x) {
    if (std::abs(space.weight(sigma[x]) - space.weight(x)) > kWeightTolerance) {
      throw UsageError("conjugator does not preserve weights at atom " + std::to_string(x + 1));
    }
  }
  std::vector<Permutation> gens;
  for (const auto& pi : a.generators()) {
    Permutation c(pi.size());
    for (Atom x = 0; x < pi.size(); ++x) c[sigma[x]] = sigma[pi[x]];
    gens.push_back(std::move(c));
  }
  return MPAction(a.space(), std::move(gens), a.cached_words());
}

/// Uniformly random permutation within each class of equal weights.
inline Permutation random_weight_preserving_permutation(const WeightedSpace& space, Rng& rng) {
  std::map<double, std::vector<Atom>> classes;
  for (Atom x = 0; x < space.size(); ++x) classes[space.weight(x)].push_back(x);
  Permutation p(space.size());
  for (auto& [w, atoms] : classes) {
    std::vector<Atom> images = atoms;
    rng.shuffle(images);
    for (std::size_t i = 0; i < atoms.size(); ++i) p[atoms[i]] = images[i];
  }
  return p;
}

/// Random action on `atoms` atoms: weights fall into a few equal-weight
/// classes so generators can move atoms while preserving weights.
inline MPAction random_action(Rng& rng, std::size_t atoms, int rank = 1, std::size_t cached_words = kDefaultWordCache) {
  if (atoms < 1) throw UsageError("random action needs at least one atom");
  const std::size_t classes = 1 + rng.index(atoms);
  std::vector<std::size_t> cls(atoms);
  for (std::size_t i = 0; i < atoms; ++i) cls[i] = i < classes ? i : rng.index(classes);
  std::vector<double> class_mass(classes);
  std::vector<std::size_t> class_size(classes, 0);
  for (std::size_t c : cls) ++class_size[c];
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) total += class_mass[c] = 0.2 + rng.uniform();
  std::vector<double> w(atoms);
  for (std::size_t i = 0; i < atoms; ++i) w[i] = class_mass[cls[i]] / total / static_cast<double>(class_size[cls[i]]);
  auto space = std::make_shared<const WeightedSpace>(std::move(w));
  std::vector<Permutation> gens;
  for (int g = 0; g < rank; ++g) gens.push_back(random_weight_preserving_permutation(*space, rng));
  return make_action(std::move(space), std::move(gens), cached_words);
}

// ---------------------------------------------------------------------------
// Sequence harness

enum class SequenceFamily { constant, mixture, conjugate };

struct HarnessSpec {
  SequenceFamily family = SequenceFamily::constant;
  std::optional<MPAction> a, b;
  /// Mixed in with weight λ_n = 1/n for the mixture family.
  std::optional<MPAction> perturb_a, perturb_b;
  std::size_t n_min = 2;
  std::size_t n_max = 6;
  std::size_t T = 2;
  std::size_t K = 2;
  std::uint64_t seed = 0;
  std::uint64_t budget = kDefaultBudget;
};

struct HarnessRow {
  std::size_t n = 0;
  double lambda = 0.0;
  double df_a = 0.0;     // d_f(a_n, a)
  double df_b = 0.0;     // d_f(b_n, b)
  double df_prod = 0.0;  // d_f(a_n × b_n, a × b)
  double bound = 0.0;    // df_a + df_b
  /// Per word count t: d_H sup over k for the product, and the factor sum.
  std::vector<double> prod_by_t;
  std::vector<double> bound_by_t;
  bool holds = true;
};

inline constexpr double kHarnessTolerance = 1e-9;

struct HarnessTable {
  std::size_t T = 0;
  std::size_t K = 0;
  std::size_t K_factor = 0;
  std::vector<HarnessRow> rows;
};

namespace detail {
/// max_k d_H per t, exact mode.
inline std::vector<double> sup_by_t(const FineDistanceResult& r) {
  std::vector<double> out;
  for (const auto& row : r.table) out.push_back(*std::max_element(row.begin(), row.end()));
  return out;
}
}  // namespace detail

/// Builds the sequences (a_n) and (b_n) and measures their fine distances to
/// the limits in exact mode. Factor distances use block counts up to
/// K_factor = max(K, factor atom counts), which is the range the product
/// bound draws on; the product column uses K.
inline HarnessTable sequence_harness(const HarnessSpec& spec) {
  if (!spec.a || !spec.b) throw UsageError("harness needs actions a and b");
  if (spec.family == SequenceFamily::mixture && (!spec.perturb_a || !spec.perturb_b)) {
    throw UsageError("mixture harness needs perturb_a and perturb_b");
  }
  if (spec.n_min < 2 || spec.n_max < spec.n_min) throw UsageError("harness needs 2 <= n_min <= n_max");
  const MPAction& a = *spec.a;
  const MPAction& b = *spec.b;

  auto nth = [&](const MPAction& base, const std::optional<MPAction>& perturb, std::size_t n, std::uint64_t stream) {
    switch (spec.family) {
      case SequenceFamily::constant:
        return base;
      case SequenceFamily::mixture:
        return mixture(base, *perturb, 1.0 / static_cast<double>(n));
      case SequenceFamily::conjugate: {
        Rng rng(stream_seed(spec.seed, 2 * n + stream));
        return conjugate(base, random_weight_preserving_permutation(*base.space(), rng));
      }
    }
    throw std::logic_error("unknown family");
  };

  HarnessTable table;
  table.T = spec.T;
  table.K = spec.K;
  std::size_t biggest = std::max(a.atoms(), b.atoms());
  if (spec.family == SequenceFamily::mixture) {
    biggest = std::max(a.atoms() + spec.perturb_a->atoms(), b.atoms() + spec.perturb_b->atoms());
  }
  table.K_factor = std::max(spec.K, biggest);

  const std::size_t count = spec.n_max - spec.n_min + 1;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = spec.n_min + i;
    const MPAction an = nth(a, spec.perturb_a, n, 0);
    const MPAction bn = nth(b, spec.perturb_b, n, 1);
    if (!exhaustive_feasible(an.atoms() * bn.atoms(), spec.K, spec.budget) ||
        !exhaustive_feasible(std::max(an.atoms(), bn.atoms()), table.K_factor, spec.budget)) {
      throw BudgetError("harness row n = " + std::to_string(n) + " is too large for exact enumeration");
    }
  }

  table.rows.resize(count);
  parallel_for(count, [&](std::size_t i) {
    const std::size_t n = spec.n_min + i;
    const MPAction an = nth(a, spec.perturb_a, n, 0);
    const MPAction bn = nth(b, spec.perturb_b, n, 1);
    TruncationParams factor;
    factor.T = spec.T;
    factor.K = table.K_factor;
    factor.mode = Mode::exact;
    factor.budget = spec.budget;
    TruncationParams prod = factor;
    prod.K = spec.K;

    const auto ra = fine_distance(an, a, factor);
    const auto rb = fine_distance(bn, b, factor);
    const auto rp = fine_distance(product_action(an, bn), product_action(a, b), prod);

    HarnessRow& row = table.rows[i];
    row.n = n;
    row.lambda = spec.family == SequenceFamily::mixture ? 1.0 / static_cast<double>(n) : 0.0;
    row.df_a = ra.value;
    row.df_b = rb.value;
    row.df_prod = rp.value;
    row.bound = ra.value + rb.value;
    const auto sa = detail::sup_by_t(ra);
    const auto sb = detail::sup_by_t(rb);
    row.prod_by_t = detail::sup_by_t(rp);
    row.holds = row.df_prod <= row.bound + kHarnessTolerance;
    for (std::size_t t = 0; t < spec.T; ++t) {
      row.bound_by_t.push_back(sa[t] + sb[t]);
      row.holds = row.holds && row.prod_by_t[t] <= row.bound_by_t[t] + kHarnessTolerance;
    }
  });
  return table;
}

}  // namespace weakeq
