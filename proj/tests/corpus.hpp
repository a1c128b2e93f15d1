#pragma once

#include <vector>

#include "argnn/generators.hpp"

namespace testing_corpus {

/// The seeded mixed-family corpus of small frameworks (|A| <= 8) used by
/// the exactness tests.
inline std::vector<argnn::AF> small_corpus(std::size_t count = 300, std::uint64_t seed = 20240611) {
  argnn::CorpusSpec spec;
  spec.n_min = 1;
  spec.n_max = 8;
  spec.count = count;
  spec.seed = seed;
  spec.deduplicate = false;
  std::vector<argnn::AF> out;
  for (auto& g : argnn::generate_corpus(spec)) out.push_back(std::move(g.af));
  return out;
}

}  // namespace testing_corpus
