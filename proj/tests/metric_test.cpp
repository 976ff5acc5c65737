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
#include "weakeq/metric.hpp"
#include "weakeq/products.hpp"

using namespace weakeq;

namespace {

MPAction identity2() { return make_action(WeightedSpace::uniform(2), {{0, 1}}); }
MPAction swap2() { return make_action(WeightedSpace::uniform(2), {{1, 0}}); }

TruncationParams exact(std::size_t T, std::size_t K) {
  TruncationParams p;
  p.T = T;
  p.K = K;
  p.mode = Mode::exact;
  return p;
}

}  // namespace

TEST(TailBound, Values) {
  EXPECT_DOUBLE_EQ(tail_bound(1), 3.0);
  EXPECT_DOUBLE_EQ(tail_bound(2), 2.0);
  EXPECT_DOUBLE_EQ(tail_bound(10), 24.0 / 1024.0);
  EXPECT_DOUBLE_EQ(truncated_value_bound(2), 2.0);
}

TEST(FineDistance, SelfIsZeroWithZeroTable) {
  Rng rng(1);
  const auto a = random_action(rng, 4, 2);
  const auto r = fine_distance(a, a, exact(3, 2));
  EXPECT_EQ(r.value, 0.0);
  EXPECT_TRUE(r.exact);
  for (const auto& row : r.table) {
    for (double v : row) EXPECT_EQ(v, 0.0);
  }
}

TEST(FineDistance, ConjugateIsZero) {
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const auto a = random_action(rng, 2 + rng.index(4), 1 + static_cast<int>(rng.index(2)));
    const auto c = conjugate(a, random_weight_preserving_permutation(*a.space(), rng));
    EXPECT_EQ(fine_distance(a, c, exact(3, 3)).value, 0.0);
  }
}

TEST(FineDistance, IdentityVersusSwap) {
  const auto r = fine_distance(identity2(), swap2(), exact(2, 2));
  EXPECT_EQ(r.value, 0.5);
  EXPECT_EQ(r.table[0][1], 0.0);
  EXPECT_EQ(r.table[1][1], 2.0);
  EXPECT_EQ(r.K, 2u);
}

TEST(FineDistance, DefaultKIsLargerAtomCount) {
  TruncationParams p;
  p.T = 1;
  const auto r = fine_distance(identity2(), make_action(WeightedSpace::uniform(3), {{1, 2, 0}}), p);
  EXPECT_EQ(r.K, 3u);
}

TEST(FineDistance, MatchesDefinition) {
  Rng rng(3);
  for (int i = 0; i < 25; ++i) {
    const auto a = random_action(rng, 1 + rng.index(4), 1 + static_cast<int>(rng.index(2)));
    const auto b = random_action(rng, 1 + rng.index(4), a.rank());
    const std::size_t T = 1 + rng.index(3), K = 1 + rng.index(3);
    ASSERT_NEAR(fine_distance(a, b, exact(T, K)).value, oracle::fine(a, b, T, K), 1e-12);
  }
}

TEST(FineDistance, WithinValueBound) {
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto a = random_action(rng, 1 + rng.index(4));
    const auto b = random_action(rng, 1 + rng.index(4));
    const auto r = fine_distance(a, b, exact(3, 3));
    EXPECT_LE(r.value, truncated_value_bound(3) + 1e-12);
  }
}

TEST(FineDistance, ExactModeRefusesOverBudget) {
  auto p = exact(1, 3);
  p.budget = 8;
  EXPECT_THROW(fine_distance(identity2(), make_action(WeightedSpace::uniform(3), {{1, 2, 0}}), p), BudgetError);
}

TEST(FineDistance, RankMismatch) {
  const auto b = make_action(WeightedSpace::uniform(2), {{0, 1}, {1, 0}});
  EXPECT_THROW(fine_distance(identity2(), b, exact(1, 1)), UsageError);
}

TEST(FineDistance, HeuristicUpperBoundsOnlyUpward) {
  // Heuristic directed distances are maxima of attained inner distances
  // over a subset of outer points; on these sizes they match exact values.
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const auto a = random_action(rng, 3 + rng.index(3));
    const auto b = random_action(rng, 3 + rng.index(3));
    TruncationParams h = exact(2, 2);
    h.mode = Mode::heuristic;
    const auto rh = fine_distance(a, b, h);
    EXPECT_FALSE(rh.exact);
    EXPECT_LE(rh.value, truncated_value_bound(2));
  }
}

TEST(WeaklyContained, SelfAtZero) {
  Rng rng(6);
  const auto a = random_action(rng, 4);
  EXPECT_TRUE(weakly_contained(a, a, exact(3, 3), 0.0).pass);
}

TEST(WeaklyContained, IntoProduct) {
  Rng rng(7);
  for (int i = 0; i < 5; ++i) {
    const auto a = random_action(rng, 2 + rng.index(2));
    const auto b = random_action(rng, 2);
    EXPECT_TRUE(weakly_contained(a, product_action(a, b), exact(2, 2), 1e-12).pass);
  }
}

TEST(WeaklyContained, IdentityNotInSwap) {
  const auto r = weakly_contained(identity2(), swap2(), exact(2, 2), 0.1);
  EXPECT_FALSE(r.pass);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_EQ(r.witness->distance, 2.0);
  EXPECT_EQ(r.witness->t, 2u);
  EXPECT_EQ(r.witness->k, 2u);
  EXPECT_NE(r.witness->labels[0], r.witness->labels[1]);
}

TEST(WeaklyContained, SwapNotInIdentity) {
  EXPECT_FALSE(weakly_contained(swap2(), identity2(), exact(2, 2), 0.1).pass);
}

TEST(WeaklyEquivalent, Cases) {
  Rng rng(8);
  const auto a = random_action(rng, 4, 2);
  EXPECT_TRUE(weakly_equivalent(a, a, exact(2, 2), 0.0).pass);
  const auto c = conjugate(a, random_weight_preserving_permutation(*a.space(), rng));
  EXPECT_TRUE(weakly_equivalent(a, c, exact(2, 2), 1e-9).pass);
  EXPECT_FALSE(weakly_equivalent(identity2(), swap2(), exact(2, 2), 1e-9).pass);
}

TEST(TruncationParams, OverridesApplyPerCell) {
  TruncationParams p;
  SearchConfig strong;
  strong.restarts = 20;
  p.overrides[{2, 2}] = strong;
  EXPECT_EQ(p.config_for(2, 2).restarts, 20u);
  EXPECT_EQ(p.config_for(1, 2).restarts, SearchConfig{}.restarts);
}
