#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "argnn/af.hpp"
#include "argnn/isomorphism.hpp"
#include "argnn/random.hpp"
#include "argnn/semantics.hpp"

namespace argnn {

enum class Family { random_attack, grounded_oriented, scc_structured, stable_oriented };

inline constexpr std::array<Family, 4> all_families{Family::random_attack, Family::grounded_oriented,
                                                   Family::scc_structured, Family::stable_oriented};

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::random_attack: return "random-attack";
    case Family::grounded_oriented: return "grounded-oriented";
    case Family::scc_structured: return "scc-structured";
    case Family::stable_oriented: return "stable-oriented";
  }
  return "?";
}

inline Family parse_family(std::string_view s) {
  for (Family f : all_families)
    if (family_name(f) == s) return f;
  throw UsageError("unknown generator family '" + std::string(s) + "'");
}

struct GeneratorSpec {
  Family family = Family::random_attack;
  std::size_t n_min = 5;
  std::size_t n_max = 5;
  // Fixed per-pair attack probability. When unset, each framework draws an
  // expected attack degree from [min_degree, max_degree] and uses
  // min(degree / n, 0.5).
  std::optional<double> attack_probability;
  double min_degree = 1.0;
  double max_degree = 3.5;
  // scc-structured: number of blocks; 0 draws from [2, 4].
  std::size_t scc_count = 0;
  // grounded-oriented: fraction of unattacked roots.
  double root_fraction = 0.2;
  // grounded-oriented: probability scale of backward (cycle-forming) attacks.
  double backward_ratio = 0.25;
  // stable-oriented: bounded retry loop.
  std::size_t max_attempts = 1000;
  std::uint64_t seed = 0;
};

namespace detail {

inline void validate(const GeneratorSpec& spec) {
  if (spec.n_min < 1 || spec.n_max < spec.n_min) throw UsageError("argument count range must satisfy 1 <= min <= max");
  if (spec.attack_probability && (*spec.attack_probability < 0.0 || *spec.attack_probability > 1.0))
    throw UsageError("attack probability must lie in [0, 1]");
  if (spec.min_degree < 0.0 || spec.max_degree < spec.min_degree) throw UsageError("bad degree range");
  if (spec.root_fraction < 0.0 || spec.root_fraction > 1.0) throw UsageError("root fraction must lie in [0, 1]");
  if (spec.backward_ratio < 0.0) throw UsageError("backward ratio must be non-negative");
}

inline double pair_probability(const GeneratorSpec& spec, std::size_t n, Rng& rng) {
  if (spec.attack_probability) return *spec.attack_probability;
  // Capped so that tiny frameworks are not forced to be complete graphs.
  return std::min(0.5, rng.uniform(spec.min_degree, spec.max_degree) / static_cast<double>(n));
}

inline AF shuffled(std::size_t n, std::vector<Attack> attacks, Rng& rng) {
  std::vector<ArgIndex> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  for (auto& [s, t] : attacks) {
    s = perm[s];
    t = perm[t];
  }
  return AF(n, std::move(attacks));
}

inline AF random_attack(std::size_t n, double p, Rng& rng) {
  std::vector<Attack> att;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t)
      if (rng.bernoulli(p)) att.emplace_back(static_cast<ArgIndex>(s), static_cast<ArgIndex>(t));
  return AF(n, std::move(att));
}

// Mostly forward attacks along a random order, roots never attacked.
inline AF grounded_oriented(const GeneratorSpec& spec, std::size_t n, Rng& rng) {
  const double p = pair_probability(spec, n, rng) * 1.5;
  const double back = std::min(1.0, p * spec.backward_ratio);
  const std::size_t roots =
      std::max<std::size_t>(1, static_cast<std::size_t>(spec.root_fraction * static_cast<double>(n) + 0.5));
  std::vector<Attack> att;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j >= roots && rng.bernoulli(std::min(1.0, p))) att.emplace_back(i, j);
      if (i >= roots && rng.bernoulli(back)) att.emplace_back(j, i);
    }
  return shuffled(n, std::move(att), rng);
}

// Blocks with an internal cycle plus random intra-block attacks, and sparser
// attacks from earlier blocks to later ones.
inline AF scc_structured(const GeneratorSpec& spec, std::size_t n, Rng& rng) {
  std::size_t k = spec.scc_count ? spec.scc_count : static_cast<std::size_t>(rng.between(2, 4));
  k = std::min(k, n);
  const double p = pair_probability(spec, n, rng);
  std::vector<std::size_t> block(n);
  for (std::size_t i = 0; i < n; ++i) block[i] = i < k ? i : static_cast<std::size_t>(rng.below(k));
  std::sort(block.begin(), block.end());
  std::vector<Attack> att;
  for (std::size_t b = 0; b < k; ++b) {
    std::vector<ArgIndex> members;
    for (std::size_t i = 0; i < n; ++i)
      if (block[i] == b) members.push_back(static_cast<ArgIndex>(i));
    rng.shuffle(members);
    if (members.size() >= 2)
      for (std::size_t i = 0; i < members.size(); ++i) att.emplace_back(members[i], members[(i + 1) % members.size()]);
  }
  const double p_in = std::min(1.0, p * static_cast<double>(k));
  const double p_out = std::min(1.0, p * 0.5);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t) {
      if (s == t) continue;
      if (block[s] == block[t] && rng.bernoulli(p_in * 0.5)) att.emplace_back(s, t);
      if (block[s] < block[t] && rng.bernoulli(p_out)) att.emplace_back(s, t);
    }
  return shuffled(n, std::move(att), rng);
}

}  // namespace detail

/// One framework from the given family; deterministic in spec.seed.
inline AF generate(const GeneratorSpec& spec) {
  detail::validate(spec);
  Rng rng(spec.seed);
  const std::size_t n = static_cast<std::size_t>(
      rng.between(static_cast<std::int64_t>(spec.n_min), static_cast<std::int64_t>(spec.n_max)));
  switch (spec.family) {
    case Family::random_attack: return detail::random_attack(n, detail::pair_probability(spec, n, rng), rng);
    case Family::grounded_oriented: return detail::grounded_oriented(spec, n, rng);
    case Family::scc_structured: return detail::scc_structured(spec, n, rng);
    case Family::stable_oriented:
      for (std::size_t attempt = 0; attempt < spec.max_attempts; ++attempt) {
        AF af = detail::random_attack(n, detail::pair_probability(spec, n, rng), rng);
        if (!enumerate_extensions(af, Semantics::stable).empty()) return af;
      }
      throw ResourceError("no framework with a stable extension within the attempt bound");
  }
  throw UsageError("unknown family");
}

struct GeneratedAF {
  AF af;
  Family family;
  std::uint64_t seed;
  std::uint64_t signature;
};

struct CorpusSpec {
  // Empty means uniform over all families.
  std::vector<Family> families;
  std::size_t n_min = 5;
  std::size_t n_max = 10;
  std::size_t count = 100;
  std::uint64_t seed = 0;
  bool deduplicate = true;
  // Upper bound on draws, as a multiple of count, before giving up.
  std::size_t max_draw_factor = 50;
  GeneratorSpec base{};
};

/// Draws `count` frameworks. Each draw i uses seed derive(seed, i); when
/// deduplicating, isomorphic repeats (also against `seen`, which is updated)
/// are skipped.
inline std::vector<GeneratedAF> generate_corpus(const CorpusSpec& spec, Deduplicator* seen = nullptr) {
  std::vector<Family> fams = spec.families.empty()
                                 ? std::vector<Family>(all_families.begin(), all_families.end())
                                 : spec.families;
  Deduplicator local;
  Deduplicator& dedup = seen ? *seen : local;
  std::vector<GeneratedAF> out;
  out.reserve(spec.count);
  Rng pick(Rng::derive(spec.seed, 0xfa11));
  const std::size_t max_draws = std::max<std::size_t>(spec.count * spec.max_draw_factor, 16);
  for (std::size_t i = 0; out.size() < spec.count; ++i) {
    if (i >= max_draws) throw ResourceError("could not draw enough distinct frameworks");
    GeneratorSpec g = spec.base;
    g.family = fams[pick.below(fams.size())];
    g.n_min = spec.n_min;
    g.n_max = spec.n_max;
    g.seed = Rng::derive(spec.seed, i);
    AF af = generate(g);
    if (spec.deduplicate && !dedup.insert(af)) continue;
    const auto sig = canonical_signature(af);
    out.push_back({std::move(af), g.family, g.seed, sig});
  }
  return out;
}

}  // namespace argnn
