#include <gtest/gtest.h>

#include <numeric>

#include "argnn/generators.hpp"
#include "argnn/isomorphism.hpp"
#include "argnn/semantics.hpp"
#include "oracle.hpp"

using namespace argnn;

TEST(Generate, AttackProbabilityExtremes) {
  GeneratorSpec spec;
  spec.n_min = spec.n_max = 4;
  spec.attack_probability = 0.0;
  EXPECT_EQ(generate(spec).attacks().size(), 0u);
  spec.attack_probability = 1.0;
  EXPECT_EQ(generate(spec).attacks().size(), 16u);
}

TEST(Generate, SeededReproducible) {
  for (Family f : all_families) {
    GeneratorSpec spec;
    spec.family = f;
    spec.n_min = 5;
    spec.n_max = 12;
    spec.seed = 99;
    EXPECT_EQ(generate(spec), generate(spec)) << family_name(f);
  }
}

TEST(Generate, SizesWithinRange) {
  for (Family f : all_families)
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      GeneratorSpec spec;
      spec.family = f;
      spec.n_min = 3;
      spec.n_max = 9;
      spec.seed = seed;
      const auto n = generate(spec).size();
      EXPECT_GE(n, 3u);
      EXPECT_LE(n, 9u);
    }
}

TEST(Generate, StableOrientedHasStableExtension) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    GeneratorSpec spec;
    spec.family = Family::stable_oriented;
    spec.n_min = 4;
    spec.n_max = 10;
    spec.seed = seed;
    EXPECT_FALSE(enumerate_extensions(generate(spec), Semantics::stable).empty());
  }
}

TEST(Generate, GroundedOrientedHasUnattackedRoot) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    GeneratorSpec spec;
    spec.family = Family::grounded_oriented;
    spec.n_min = 5;
    spec.n_max = 10;
    spec.seed = seed;
    EXPECT_FALSE(grounded_extension(generate(spec)).empty());
  }
}

TEST(Generate, InvalidSpecs) {
  GeneratorSpec spec;
  spec.n_min = 5;
  spec.n_max = 4;
  EXPECT_THROW(generate(spec), UsageError);
  spec.n_max = 6;
  spec.attack_probability = 1.5;
  EXPECT_THROW(generate(spec), UsageError);
  EXPECT_THROW(parse_family("lattice"), UsageError);
}

TEST(Signature, InvariantUnderPermutation) {
  Rng rng(3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    GeneratorSpec spec;
    spec.family = all_families[seed % 4];
    spec.n_min = 2;
    spec.n_max = 14;
    spec.seed = seed;
    const AF f = generate(spec);
    std::vector<ArgIndex> perm(f.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    const AF g = permute(f, perm);
    EXPECT_EQ(canonical_signature(f), canonical_signature(g));
    if (f.size() <= 12) {
      EXPECT_TRUE(is_isomorphic_exact(f, g));
    }
  }
}

TEST(Signature, DistinguishesSmallChanges) {
  const AF f = running_example();
  auto att = f.attacks();
  att.emplace_back(0, 2);
  EXPECT_NE(canonical_signature(f), canonical_signature(AF(4, att)));
  EXPECT_NE(canonical_signature(AF(1, {})), canonical_signature(AF(1, {{0, 0}})));
}

TEST(Isomorphism, Fixtures) {
  const AF f = running_example();
  EXPECT_TRUE(is_isomorphic_exact(f, permute(f, std::vector<ArgIndex>{3, 1, 0, 2})));
  EXPECT_FALSE(is_isomorphic_exact(f, oracle::fig4_af()));
  EXPECT_TRUE(is_isomorphic_exact(AF(3, {}), AF(3, {})));
  EXPECT_THROW(is_isomorphic_exact(AF(13, {}), AF(13, {})), ResourceError);
}

namespace {

// Tries every bijection.
bool brute_isomorphic(const AF& a, const AF& b) {
  if (a.size() != b.size() || a.attacks().size() != b.attacks().size()) return false;
  std::vector<ArgIndex> p(a.size());
  std::iota(p.begin(), p.end(), 0);
  do {
    bool ok = true;
    for (const auto& [s, t] : a.attacks())
      if (!b.attacks(p[s], p[t])) {
        ok = false;
        break;
      }
    if (ok) return true;
  } while (std::next_permutation(p.begin(), p.end()));
  return false;
}

}  // namespace

TEST(Isomorphism, AgreesWithBruteForceOnSmallPairs) {
  // Regular-ish structures defeat colour refinement, so include cycles.
  std::vector<AF> pool{AF(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}}),
                       AF(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}}),
                       AF(6, {{0, 1}, {1, 0}, {2, 3}, {3, 2}, {4, 5}, {5, 4}})};
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    GeneratorSpec spec;
    spec.n_min = spec.n_max = 5;
    spec.attack_probability = 0.3;
    spec.seed = seed;
    pool.push_back(generate(spec));
  }
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i; j < pool.size(); ++j)
      ASSERT_EQ(is_isomorphic_exact(pool[i], pool[j]), brute_isomorphic(pool[i], pool[j])) << i << "," << j;
}

TEST(Corpus, DeduplicatedCorpusHasNoIsomorphicPairs) {
  CorpusSpec spec;
  spec.n_min = 3;
  spec.n_max = 6;
  spec.count = 80;
  spec.seed = 5;
  const auto corpus = generate_corpus(spec);
  ASSERT_EQ(corpus.size(), 80u);
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (std::size_t j = i + 1; j < corpus.size(); ++j)
      ASSERT_FALSE(brute_isomorphic(corpus[i].af, corpus[j].af));
}

TEST(Corpus, SharedDeduplicatorKeepsSplitsDisjoint) {
  Deduplicator seen;
  CorpusSpec a;
  a.n_min = 3;
  a.n_max = 5;
  a.count = 40;
  a.seed = 1;
  CorpusSpec b = a;
  b.seed = 2;
  const auto x = generate_corpus(a, &seen);
  const auto y = generate_corpus(b, &seen);
  for (const auto& g : x)
    for (const auto& h : y) ASSERT_FALSE(is_isomorphic_exact(g.af, h.af));
}

TEST(Corpus, Reproducible) {
  CorpusSpec spec;
  spec.count = 30;
  spec.seed = 8;
  const auto x = generate_corpus(spec);
  const auto y = generate_corpus(spec);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].af, y[i].af);
}
