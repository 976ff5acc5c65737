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
#include "weakeq/statistics.hpp"

using namespace weakeq;

TEST(StatPoint, OneBlockIsAllOnes) {
  Rng rng(5);
  const auto a = random_action(rng, 5, 2);
  const auto p = stat_point(a, Partition::trivial(a.space()), 4);
  for (double v : p.values) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(StatPoint, IdentityWordIsDiagonalBlockMass) {
  Rng rng(6);
  const auto a = random_action(rng, 6);
  const Partition P(a.space(), 3, {0, 1, 2, 0, 1, 1});
  const auto p = stat_point(a, P, 1);
  for (Label l = 0; l < 3; ++l) {
    for (Label m = 0; m < 3; ++m) EXPECT_NEAR(p(0, l, m), l == m ? P.block_weight(l) : 0.0, 1e-15);
  }
}

TEST(StatPoint, SwapSingletons) {
  const auto a = make_action(WeightedSpace::uniform(2), {{1, 0}});
  const auto p = stat_point(a, Partition::singletons(a.space()), 2);
  EXPECT_EQ(p(1, 0, 0), 0.0);
  EXPECT_EQ(p(1, 0, 1), 0.5);
  EXPECT_EQ(p(1, 1, 0), 0.5);
  EXPECT_EQ(p(1, 1, 1), 0.0);
}

TEST(StatPoint, RejectsForeignPartition) {
  const auto a = make_action(WeightedSpace::uniform(2), {{1, 0}});
  const Partition p(WeightedSpace::uniform(3), 1, {0, 0, 0});
  EXPECT_THROW(stat_point(a, p, 1), UsageError);
}

TEST(StatPoint, MatchesReferenceOnRandomActions) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(7), k = 1 + rng.index(4), t = 1 + rng.index(9);
    const auto a = random_action(rng, n, 1 + static_cast<int>(rng.index(2))).with_words(t);
    std::vector<Label> lab(n);
    for (auto& l : lab) l = static_cast<Label>(rng.index(k));
    const auto p = stat_point(a, Partition(a.space(), k, lab), t);
    const auto w = a.space()->weights();
    const auto ref = oracle::stat({w.begin(), w.end()}, a.generators(), lab, k, t);
    ASSERT_LT(oracle::l1(p.values, ref), 1e-12);
  }
}

TEST(L1Distance, Examples) {
  StatPoint x(1, 2, {1, 0, 0, 0}), y(1, 2, {0, 0, 0, 1});
  EXPECT_EQ(l1_distance(x, x), 0.0);
  EXPECT_EQ(l1_distance(StatPoint(1, 1, {1}), StatPoint(1, 1, {1})), 0.0);
  EXPECT_EQ(l1_distance(x, y), 2.0);
  EXPECT_THROW(l1_distance(x, StatPoint(2, 2)), UsageError);
}

TEST(L1Distance, BoundedAgreesBelowCutoff) {
  StatPoint x(1, 2, {0.5, 0.25, 0, 0.25}), y(1, 2, {0.25, 0.25, 0.25, 0.25});
  EXPECT_EQ(l1_distance_bounded(x, y, 10.0), l1_distance(x, y));
  EXPECT_GE(l1_distance_bounded(x, y, 0.1), 0.1);
}

TEST(StatPoint, PrefixDropsLaterWords) {
  const auto a = make_action(WeightedSpace::uniform(3), {{1, 2, 0}});
  const Partition P(a.space(), 2, {0, 1, 1});
  EXPECT_EQ(stat_point(a, P, 5).prefix(2), stat_point(a, P, 2));
}

TEST(StatTracker, RelabelMatchesRecompute) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(8), k = 1 + rng.index(4), t = 1 + rng.index(6);
    const auto a = random_action(rng, n, 1 + static_cast<int>(rng.index(2))).with_words(t);
    std::vector<Label> lab(n, 0);
    StatTracker tr(a, t, k, lab);
    std::vector<std::size_t> touched, predicted;
    for (int step = 0; step < 50; ++step) {
      const Atom x = static_cast<Atom>(rng.index(n));
      const Label to = static_cast<Label>(rng.index(k));
      predicted.clear();
      touched.clear();
      tr.cells_touched(x, to, predicted);
      tr.relabel(x, to, &touched);
      ASSERT_EQ(predicted, touched);
      ASSERT_LE(touched.size(), 4 * t);
      lab[x] = to;
    }
    const auto fresh = stat_point(a, Partition(a.space(), k, lab), t);
    ASSERT_LT(l1_distance(tr.stat(), fresh), 1e-12);
    tr.resync();
    ASSERT_EQ(tr.stat(), fresh);
  }
}
