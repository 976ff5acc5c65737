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

#include <gtest/gtest.h>

#include "support.hpp"
#include "weakeq/generators.hpp"

using namespace weakeq;

namespace {

TruncationParams exact(std::size_t T, std::size_t K) {
  TruncationParams p;
  p.T = T;
  p.K = K;
  p.mode = Mode::exact;
  return p;
}

}  // namespace

TEST(FiniteGroupTable, NamedGroups) {
  EXPECT_EQ(FiniteGroupTable::named("z1").order(), 1u);
  EXPECT_EQ(FiniteGroupTable::named("z4").order(), 4u);
  const auto s3 = FiniteGroupTable::named("s3");
  EXPECT_EQ(s3.order(), 6u);
  // Non-abelian.
  const auto g = s3.generators();
  EXPECT_NE(s3.mul(g[0], g[1]), s3.mul(g[1], g[0]));
  EXPECT_THROW(FiniteGroupTable::named("z5"), UsageError);
}

TEST(FiniteGroupTable, RejectsNonGroups) {
  // Not associative / no inverses: constant table.
  EXPECT_THROW(FiniteGroupTable({{0, 0}, {0, 0}}, {1}), UsageError);
  // Generator set that does not generate Z/4.
  EXPECT_THROW(FiniteGroupTable({{0, 1, 2, 3}, {1, 2, 3, 0}, {2, 3, 0, 1}, {3, 0, 1, 2}}, {2}), UsageError);
}

TEST(Bernoulli, TrivialGroupIsBase) {
  const auto a = bernoulli_shift(FiniteGroupTable::named("z1"), {0.25, 0.75});
  ASSERT_EQ(a.atoms(), 2u);
  EXPECT_EQ(a.space()->weight(0), 0.25);
  EXPECT_EQ(a.generators()[0], identity_permutation(2));
}

TEST(Bernoulli, ZTwoUniform) {
  const auto a = bernoulli_shift(FiniteGroupTable::named("z2"), {0.5, 0.5});
  ASSERT_EQ(a.atoms(), 4u);
  for (double w : a.space()->weights()) EXPECT_EQ(w, 0.25);
  // Atoms encode (f(e), f(g)) as f(e) + 2 f(g): constants 0 and 3 are fixed,
  // the two non-constant functions swap.
  EXPECT_EQ(a.generators()[0], (Permutation{0, 2, 1, 3}));
}

TEST(Bernoulli, ShiftMatchesDefinition) {
  // (g.f)(h) = f(g^{-1} h)
  const auto G = FiniteGroupTable::named("s3");
  const std::size_t m = 2;
  const auto a = bernoulli_shift(G, {0.3, 0.7});
  for (std::size_t gi = 0; gi < G.generators().size(); ++gi) {
    const std::size_t g = G.generators()[gi];
    for (Atom f = 0; f < a.atoms(); ++f) {
      const Atom img = a.generators()[gi][f];
      for (std::size_t h = 0; h < G.order(); ++h) {
        const std::size_t lhs = (img >> h) & 1u;
        const std::size_t rhs = (f >> G.mul(G.inverse(g), h)) & 1u;
        ASSERT_EQ(lhs, rhs);
      }
    }
  }
  (void)m;
}

TEST(Bernoulli, AlwaysValid) {
  Rng rng(1);
  for (const char* name : {"z1", "z2", "z3", "z4", "s3"}) {
    for (std::size_t m = 2; m <= 3; ++m) {
      std::vector<double> w(m);
      double s = 0.0;
      for (auto& x : w) s += x = 0.1 + rng.uniform();
      for (auto& x : w) x /= s;
      if (std::string(name) == "s3" && m == 3) continue;
      const auto a = bernoulli_shift(FiniteGroupTable::named(name), w);
      EXPECT_TRUE(validate_action(a).empty()) << name << " m=" << m;
    }
  }
  EXPECT_THROW(bernoulli_shift(FiniteGroupTable::named("s3"), {0.5, 0.5}, 32), BudgetError);
}

TEST(Mixture, WeightsAndValidity) {
  Rng rng(2);
  const auto a = random_action(rng, 3), c = random_action(rng, 2);
  const auto m = mixture(a, c, 0.25);
  double s = 0.0;
  for (double w : m.space()->weights()) s += w;
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_TRUE(validate_action(m).empty());
  EXPECT_THROW(mixture(a, c, 1.0), UsageError);
  EXPECT_THROW(mixture(a, c, 0.0), UsageError);
}

TEST(Mixture, SmallLambdaMovesStatisticsLittle) {
  // A partition of a extended by one block holding all of c differs from
  // the corresponding partition of a by at most 2 t λ.
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_action(rng, 1 + rng.index(5)), c = random_action(rng, 1 + rng.index(4));
    const double lambda = 0.01 + 0.2 * rng.uniform();
    const std::size_t t = 1 + rng.index(4), k = 1 + rng.index(3);
    const auto m = mixture(a, c, lambda);
    std::vector<Label> la(a.atoms());
    for (auto& l : la) l = static_cast<Label>(rng.index(k));
    std::vector<Label> lm = la;
    const Label home = static_cast<Label>(rng.index(k));
    for (std::size_t j = 0; j < c.atoms(); ++j) lm.push_back(home);
    const auto wa = a.space()->weights(), wm = m.space()->weights();
    const double d = oracle::l1(oracle::stat({wa.begin(), wa.end()}, a.generators(), la, k, t),
                                oracle::stat({wm.begin(), wm.end()}, m.generators(), lm, k, t));
    ASSERT_LE(d, 2.0 * static_cast<double>(t) * lambda + 1e-12);
  }
}

TEST(Mixture, SelfMixtureAtHalf) {
  // Halving every atom adds labellings that split an atom's two copies, so
  // on atomic spaces the self-mixture is not at distance 0. One atom by hand:
  // the split point is at L1 distance 1 per word slice, giving
  // 2^-1 * 1 + 2^-2 * 2 = 1.
  const auto one = make_action(WeightedSpace::uniform(1), {{0}});
  EXPECT_EQ(fine_distance(mixture(one, one, 0.5), one, exact(2, 2)).value, 1.0);
  Rng rng(4);
  for (int i = 0; i < 6; ++i) {
    const auto a = random_action(rng, 1 + rng.index(3));
    const auto m = mixture(a, a, 0.5);
    EXPECT_NEAR(fine_distance(m, a, exact(2, 2)).value, oracle::fine(m, a, 2, 2), 1e-12);
    // a is still contained in its self-mixture: keep both copies together.
    EXPECT_TRUE(weakly_contained(a, m, exact(2, 2), 1e-12).pass);
  }
}

TEST(Conjugate, Identities) {
  Rng rng(5);
  const auto a = random_action(rng, 5, 2);
  EXPECT_EQ(conjugate(a, identity_permutation(5)).generators(), a.generators());
  const auto s = random_weight_preserving_permutation(*a.space(), rng);
  EXPECT_EQ(conjugate(conjugate(a, s), inverse(s)).generators(), a.generators());
  EXPECT_TRUE(validate_action(conjugate(a, s)).empty());
  EXPECT_EQ(fine_distance(a, conjugate(a, s), exact(3, 2)).value, 0.0);
}

TEST(Conjugate, RejectsWeightChange) {
  auto space = std::make_shared<const WeightedSpace>(std::vector<double>{0.3, 0.7});
  const auto a = make_action(space, {{0, 1}});
  EXPECT_THROW(conjugate(a, {1, 0}), UsageError);
}

TEST(Harness, ConstantSequenceIsZero) {
  Rng rng(6);
  HarnessSpec spec;
  spec.a = random_action(rng, 2);
  spec.b = random_action(rng, 2);
  spec.n_max = 4;
  const auto t = sequence_harness(spec);
  ASSERT_EQ(t.rows.size(), 3u);
  for (const auto& r : t.rows) {
    EXPECT_EQ(r.df_a, 0.0);
    EXPECT_EQ(r.df_b, 0.0);
    EXPECT_EQ(r.df_prod, 0.0);
    EXPECT_TRUE(r.holds);
  }
}

TEST(Harness, ConjugateSequenceIsZero) {
  Rng rng(7);
  HarnessSpec spec;
  spec.family = SequenceFamily::conjugate;
  spec.a = random_action(rng, 3);
  spec.b = random_action(rng, 2);
  spec.n_max = 4;
  for (const auto& r : sequence_harness(spec).rows) {
    EXPECT_EQ(r.df_a, 0.0);
    EXPECT_EQ(r.df_b, 0.0);
    EXPECT_EQ(r.df_prod, 0.0);
  }
}

TEST(Harness, MixtureSequence) {
  const auto id = make_action(WeightedSpace::uniform(2), {{0, 1}});
  const auto sw = make_action(WeightedSpace::uniform(2), {{1, 0}});
  HarnessSpec spec;
  spec.family = SequenceFamily::mixture;
  spec.a = id;
  spec.b = sw;
  spec.perturb_a = sw;
  spec.perturb_b = id;
  spec.n_min = 2;
  spec.n_max = 7;
  const auto table = sequence_harness(spec);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    // Oracle values computed from the definition.
    const auto an = mixture(id, sw, r.lambda), bn = mixture(sw, id, r.lambda);
    ASSERT_NEAR(r.df_a, oracle::fine(an, id, 2, table.K_factor), 1e-12);
    ASSERT_NEAR(r.df_prod, oracle::fine(product_action(an, bn), product_action(id, sw), 2, 2), 1e-12);
    EXPECT_LE(r.df_prod, r.bound + 1e-9);
    EXPECT_TRUE(r.holds);
    if (i > 0) {
      EXPECT_LE(r.df_a, table.rows[i - 1].df_a + 1e-12);
      EXPECT_LE(r.df_b, table.rows[i - 1].df_b + 1e-12);
    }
  }
  // The product column is not monotone at this truncation: the finest atoms
  // of a_n x b_n change with n. Frozen oracle values.
  EXPECT_NEAR(table.rows[0].df_prod, 0.375, 1e-12);
  EXPECT_NEAR(table.rows[1].df_prod, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(table.rows[2].df_prod, 0.375, 1e-12);
}

TEST(Harness, IndependentOfThreadCount) {
  Rng rng(8);
  HarnessSpec spec;
  spec.family = SequenceFamily::conjugate;
  spec.a = random_action(rng, 3);
  spec.b = random_action(rng, 3);
  spec.seed = 99;
  set_thread_count(1);
  const auto x = sequence_harness(spec);
  set_thread_count(3);
  const auto y = sequence_harness(spec);
  set_thread_count(0);
  ASSERT_EQ(x.rows.size(), y.rows.size());
  for (std::size_t i = 0; i < x.rows.size(); ++i) {
    EXPECT_EQ(x.rows[i].df_prod, y.rows[i].df_prod);
    EXPECT_EQ(x.rows[i].bound, y.rows[i].bound);
  }
}

TEST(Harness, RejectsTooLarge) {
  Rng rng(9);
  HarnessSpec spec;
  spec.a = random_action(rng, 6);
  spec.b = random_action(rng, 6);
  spec.K = 3;
  spec.budget = 1000;
  EXPECT_THROW(sequence_harness(spec), BudgetError);
}
