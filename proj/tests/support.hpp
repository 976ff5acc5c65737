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

// Reference implementations used as test oracles. They follow the
// definitions literally and share no code with the library beyond the
// plain data types.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <vector>

#include "weakeq/core.hpp"
#include "weakeq/parallel.hpp"

namespace oracle {

using weakeq::Atom;
using weakeq::Label;
using weakeq::Permutation;
using weakeq::Word;

using Matrix3 = std::vector<double>;  // flat (s, l, m)

/// Reduced words sorted by length, then lexicographically in the order
/// g1 < g1^-1 < g2 < g2^-1 < ...
inline std::vector<Word> words(int rank, std::size_t count) {
  std::vector<int> alphabet;
  for (int i = 1; i <= rank; ++i) {
    alphabet.push_back(i);
    alphabet.push_back(-i);
  }
  std::vector<Word> out{Word{}};
  std::vector<Word> layer{Word{}};
  while (out.size() < count) {
    std::vector<Word> next;
    for (const Word& w : layer) {
      for (int x : alphabet) {
        if (!w.empty() && w.back() == -x) continue;
        Word v = w;
        v.push_back(x);
        next.push_back(v);
      }
    }
    std::sort(next.begin(), next.end(), [&](const Word& u, const Word& v) {
      auto pos = [&](int x) { return std::find(alphabet.begin(), alphabet.end(), x) - alphabet.begin(); };
      return std::lexicographical_compare(u.begin(), u.end(), v.begin(), v.end(),
                                          [&](int x, int y) { return pos(x) < pos(y); });
    });
    for (const Word& w : next) out.push_back(w);
    layer = std::move(next);
  }
  out.resize(count);
  return out;
}

/// Image of x under x1 ∘ ... ∘ xn: the last letter acts first.
inline Atom apply(const std::vector<Permutation>& gens, const Word& w, Atom x) {
  for (auto it = w.rbegin(); it != w.rend(); ++it) {
    const Permutation& g = gens[static_cast<std::size_t>(std::abs(*it) - 1)];
    if (*it > 0) {
      x = g[x];
    } else {
      x = static_cast<Atom>(std::find(g.begin(), g.end(), x) - g.begin());
    }
  }
  return x;
}

/// M[s,l,m] = μ(γ_s A_l ∩ A_m), computed as the mass of {y ∈ A_m : γ_s^{-1} y ∈ A_l}.
inline Matrix3 stat(const std::vector<double>& weights, const std::vector<Permutation>& gens,
                    const std::vector<Label>& labels, std::size_t k, std::size_t t) {
  const auto ws = words(static_cast<int>(gens.size()), t);
  Matrix3 out(t * k * k, 0.0);
  const std::size_t n = weights.size();
  for (std::size_t s = 0; s < t; ++s) {
    Word inv;
    for (auto it = ws[s].rbegin(); it != ws[s].rend(); ++it) inv.push_back(-*it);
    for (Atom y = 0; y < n; ++y) {
      const Atom x = apply(gens, inv, y);
      out[(s * k + labels[x]) * k + labels[y]] += weights[y];
    }
  }
  return out;
}

inline double l1(const Matrix3& x, const Matrix3& y) {
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d += std::abs(x[i] - y[i]);
  return d;
}

/// Every labelling of n atoms with k labels, no deduplication.
inline void for_each_labelling(std::size_t n, std::size_t k, const std::function<void(const std::vector<Label>&)>& fn) {
  std::vector<Label> lab(n, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == n) {
      fn(lab);
      return;
    }
    for (Label l = 0; l < k; ++l) {
      lab[i] = l;
      rec(i + 1);
    }
  };
  rec(0);
}

inline std::vector<Matrix3> cset(const std::vector<double>& weights, const std::vector<Permutation>& gens,
                                 std::size_t t, std::size_t k) {
  std::vector<Matrix3> pts;
  for_each_labelling(weights.size(), k, [&](const std::vector<Label>& lab) { pts.push_back(stat(weights, gens, lab, k, t)); });
  return pts;
}

inline std::vector<Matrix3> cset(const weakeq::MPAction& a, std::size_t t, std::size_t k) {
  const auto w = a.space()->weights();
  return cset(std::vector<double>(w.begin(), w.end()), a.generators(), t, k);
}

inline double directed(const std::vector<Matrix3>& from, const std::vector<Matrix3>& to) {
  double worst = 0.0;
  for (const auto& x : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : to) best = std::min(best, l1(x, y));
    worst = std::max(worst, best);
  }
  return worst;
}

inline double hausdorff(const std::vector<Matrix3>& x, const std::vector<Matrix3>& y) {
  return std::max(directed(x, y), directed(y, x));
}

/// Truncated fine distance straight from the definition.
inline double fine(const weakeq::MPAction& a, const weakeq::MPAction& b, std::size_t T, std::size_t K) {
  double v = 0.0;
  for (std::size_t t = 1; t <= T; ++t) {
    double row = 0.0;
    for (std::size_t k = 1; k <= K; ++k) row = std::max(row, hausdorff(cset(a, t, k), cset(b, t, k)));
    v += row / std::pow(2.0, static_cast<double>(t));
  }
  return v;
}

/// Uniform-weight action with independently drawn generator permutations.
inline weakeq::MPAction random_uniform_action(weakeq::Rng& rng, std::size_t n, int rank = 1) {
  std::vector<Permutation> gens;
  for (int g = 0; g < rank; ++g) {
    Permutation p = weakeq::identity_permutation(n);
    rng.shuffle(p);
    gens.push_back(p);
  }
  return weakeq::make_action(weakeq::WeightedSpace::uniform(n), gens);
}

}  // namespace oracle
