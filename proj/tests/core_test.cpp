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
#include "weakeq/core.hpp"
#include "weakeq/generators.hpp"

using namespace weakeq;

namespace {

bool has_kind(const ValidationReport& r, const std::string& kind, const std::string& text) {
  for (const auto& v : r) {
    if (v.kind == kind && v.message.find(text) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(WeightedSpace, RejectsBadWeights) {
  EXPECT_THROW(WeightedSpace({0.5, 0.4}), UsageError);
  EXPECT_THROW(WeightedSpace({1.0, 0.0}), UsageError);
  EXPECT_THROW(WeightedSpace({}), UsageError);
  EXPECT_NO_THROW(WeightedSpace({0.25, 0.75}));
}

TEST(WeightedSpace, ProductIsRowMajor) {
  auto l = std::make_shared<const WeightedSpace>(std::vector<double>{1.0 / 3, 2.0 / 3});
  auto r = WeightedSpace::uniform(2);
  auto p = WeightedSpace::product(l, r);
  ASSERT_EQ(p->size(), 4u);
  EXPECT_NEAR(p->weight(0), 1.0 / 6, 1e-15);
  EXPECT_NEAR(p->weight(1), 1.0 / 6, 1e-15);
  EXPECT_NEAR(p->weight(2), 1.0 / 3, 1e-15);
  EXPECT_NEAR(p->weight(3), 1.0 / 3, 1e-15);
  EXPECT_EQ(p->pair(1, 0), 2u);
  EXPECT_EQ(p->unpair(3), (std::pair<Atom, Atom>{1, 1}));
}

TEST(EnumerateWords, RankOneThree) {
  const auto e = enumerate_words(1, 3);
  EXPECT_EQ(e.words, (std::vector<Word>{{}, {1}, {-1}}));
}

TEST(EnumerateWords, RankTwoFive) {
  const auto e = enumerate_words(2, 5);
  EXPECT_EQ(e.words, (std::vector<Word>{{}, {1}, {-1}, {2}, {-2}}));
}

TEST(EnumerateWords, ReducedWordsOnly) {
  const auto e = enumerate_words(1, 5);
  EXPECT_EQ(e.words, (std::vector<Word>{{}, {1}, {-1}, {1, 1}, {-1, -1}}));
}

TEST(EnumerateWords, MatchesSortedReference) {
  for (int rank = 1; rank <= 3; ++rank) {
    const std::size_t count = rank == 1 ? 41 : 200;
    EXPECT_EQ(enumerate_words(rank, count).words, oracle::words(rank, count)) << "rank " << rank;
  }
}

TEST(EnumerateWords, ParentsArePrefixes) {
  const auto e = enumerate_words(2, 120);
  for (std::size_t s = 1; s < e.words.size(); ++s) {
    Word prefix(e.words[s].begin(), e.words[s].end() - 1);
    EXPECT_EQ(e.words[e.parent[s]], prefix);
  }
}

TEST(Act, IdentityWord) {
  const auto a = make_action(WeightedSpace::uniform(3), {{1, 2, 0}});
  for (Atom x = 0; x < 3; ++x) EXPECT_EQ(act(a, 0, x), x);
}

TEST(Act, SwapMovesAtomOne) {
  const auto a = make_action(WeightedSpace::uniform(2), {{1, 0}});
  EXPECT_EQ(act(a, 1, 0), 1u);
}

TEST(Act, SquareOfThreeCycle) {
  // g1: 1 -> 2 -> 3 -> 1; word index 3 is g1 g1.
  const auto a = make_action(WeightedSpace::uniform(3), {{1, 2, 0}});
  ASSERT_EQ(a.enumeration().words[3], (Word{1, 1}));
  EXPECT_EQ(act(a, 3, 0), 2u);
}

TEST(Act, OutOfRange) {
  const auto a = make_action(WeightedSpace::uniform(2), {{1, 0}});
  EXPECT_THROW(act(a, 0, 2), UsageError);
  EXPECT_THROW(act(a, 1000, 0), UsageError);
}

TEST(Act, CompositionOrderMatchesReference) {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = oracle::random_uniform_action(rng, 2 + rng.index(5), 2);
    const auto w = oracle::words(2, a.cached_words());
    for (std::size_t s = 0; s < a.cached_words(); ++s) {
      for (Atom x = 0; x < a.atoms(); ++x) ASSERT_EQ(act(a, s, x), oracle::apply(a.generators(), w[s], x));
    }
  }
}

TEST(ValidateAction, IdentityIsValid) {
  const MPAction a(WeightedSpace::uniform(2), {{0, 1}});
  EXPECT_TRUE(validate_action(a).empty());
}

TEST(ValidateAction, WeightNotPreserved) {
  auto space = std::make_shared<const WeightedSpace>(std::vector<double>{0.3, 0.7});
  const MPAction a(space, {{1, 0}});
  const auto r = validate_action(a);
  EXPECT_TRUE(has_kind(r, "weight", "weight not preserved")) << format_report(r);
  EXPECT_THROW(make_action(space, {{1, 0}}), UsageError);
}

TEST(ValidateAction, NotABijection) {
  const MPAction a(WeightedSpace::uniform(3), {{0, 0, 2}});
  EXPECT_TRUE(has_kind(validate_action(a), "bijectivity", "not a bijection"));
}

TEST(ValidateAction, CacheMismatch) {
  auto space = WeightedSpace::uniform(2);
  auto e = enumerate_words(1, 2);
  // Word g1 should be the swap; the cache claims identity.
  const MPAction bad(space, {{1, 0}}, e, {{0, 1}, {0, 1}});
  EXPECT_TRUE(has_kind(validate_action(bad), "cache", "cache mismatch"));
}

TEST(ValidateAction, WrongSize) {
  const MPAction a(WeightedSpace::uniform(3), {{1, 0}});
  EXPECT_FALSE(validate_action(a).empty());
}

TEST(MPAction, EveryWordIsAWeightPreservingBijection) {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = random_action(rng, 1 + rng.index(7), 1 + static_cast<int>(rng.index(2)));
    for (std::size_t s = 0; s < a.cached_words(); ++s) {
      const auto& p = a.word_perm(s);
      ASSERT_TRUE(is_bijection(p));
      for (Atom x = 0; x < a.atoms(); ++x) {
        ASSERT_NEAR(a.space()->weight(p[x]), a.space()->weight(x), kWeightTolerance);
        ASSERT_EQ(a.word_inverse(s)[p[x]], x);
      }
    }
  }
}

TEST(MPAction, WithWordsExtendsCache) {
  const auto a = make_action(WeightedSpace::uniform(3), {{1, 2, 0}}, 2);
  const auto b = a.with_words(9);
  EXPECT_GE(b.cached_words(), 9u);
  EXPECT_TRUE(validate_action(b).empty());
}

TEST(Partition, RangeAndSize) {
  auto s = WeightedSpace::uniform(3);
  EXPECT_THROW(Partition(s, 2, {0, 2, 1}), UsageError);
  EXPECT_THROW(Partition(s, 2, {0, 1}), UsageError);
  const Partition p(s, 2, {0, 1, 1});
  EXPECT_NEAR(p.block_weight(1), 2.0 / 3, 1e-15);
  EXPECT_EQ(Partition::singletons(s).k(), 3u);
  EXPECT_EQ(Partition::trivial(s).k(), 1u);
}
