#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "argnn/af.hpp"

namespace argnn {

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) {
    h ^= (x >> (8 * i)) & 0xffu;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

/// Iterated colour refinement over (self-loop, out-neighbour colours,
/// in-neighbour colours) until the partition stops splitting. Colour ids are
/// assigned by sorting the refinement keys, so they are invariant under
/// relabelling.
inline std::vector<std::uint32_t> refine_colours(const AF& af) {
  const std::size_t n = af.size();
  std::vector<std::uint32_t> colour(n, 0);
  for (std::size_t a = 0; a < n; ++a)
    colour[a] = af.attacks(static_cast<ArgIndex>(a), static_cast<ArgIndex>(a)) ? 1u : 0u;
  std::size_t classes = 0;
  std::vector<std::vector<std::uint32_t>> keys(n);
  while (true) {
    for (std::size_t a = 0; a < n; ++a) {
      auto& k = keys[a];
      k.clear();
      k.push_back(colour[a]);
      std::vector<std::uint32_t> outs, ins;
      for (ArgIndex t : af.targets_of(static_cast<ArgIndex>(a))) outs.push_back(colour[t]);
      for (ArgIndex s : af.attackers_of(static_cast<ArgIndex>(a))) ins.push_back(colour[s]);
      std::sort(outs.begin(), outs.end());
      std::sort(ins.begin(), ins.end());
      k.push_back(static_cast<std::uint32_t>(outs.size()));
      k.insert(k.end(), outs.begin(), outs.end());
      k.push_back(static_cast<std::uint32_t>(ins.size()));
      k.insert(k.end(), ins.begin(), ins.end());
    }
    std::map<std::vector<std::uint32_t>, std::uint32_t> ids;
    for (const auto& k : keys) ids.emplace(k, 0);
    std::uint32_t next = 0;
    for (auto& [k, id] : ids) id = next++;
    for (std::size_t a = 0; a < n; ++a) colour[a] = ids[keys[a]];
    if (ids.size() == classes) break;
    classes = ids.size();
  }
  return colour;
}

/// Relabelling-invariant 64-bit signature: hash of the refined quotient
/// (class sizes and class-to-class attack counts).
inline std::uint64_t canonical_signature(const AF& af) {
  const auto colour = refine_colours(af);
  std::uint32_t classes = 0;
  for (auto c : colour) classes = std::max(classes, c + 1);
  std::vector<std::uint64_t> sizes(classes, 0);
  for (auto c : colour) ++sizes[c];
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(af.attacks().size());
  for (const auto& [s, t] : af.attacks()) edges.emplace_back(colour[s], colour[t]);
  std::sort(edges.begin(), edges.end());

  std::uint64_t h = 0xcbf29ce484222325ull;
  h = detail::fnv1a(h, af.size());
  h = detail::fnv1a(h, af.attacks().size());
  h = detail::fnv1a(h, classes);
  for (auto s : sizes) h = detail::fnv1a(h, s);
  for (const auto& [a, b] : edges) h = detail::fnv1a(h, (std::uint64_t{a} << 32) | b);
  return h;
}

struct IsomorphismLimits {
  std::size_t max_arguments = 12;
};

/// Exact isomorphism by refinement-pruned backtracking over bijections.
inline bool is_isomorphic_exact(const AF& a, const AF& b, const IsomorphismLimits& limits = {}) {
  if (a.size() > limits.max_arguments || b.size() > limits.max_arguments)
    throw ResourceError("framework exceeds exact isomorphism bound of " + std::to_string(limits.max_arguments));
  if (a.size() != b.size() || a.attacks().size() != b.attacks().size()) return false;
  const std::size_t n = a.size();
  if (n == 0) return true;

  // Refine on the disjoint union so colours are comparable across both.
  std::vector<Attack> uni(a.attacks());
  for (const auto& [s, t] : b.attacks())
    uni.emplace_back(static_cast<ArgIndex>(s + n), static_cast<ArgIndex>(t + n));
  const auto colour = refine_colours(AF(2 * n, std::move(uni)));

  std::vector<std::size_t> count_a(2 * n, 0), count_b(2 * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++count_a[colour[i]];
    ++count_b[colour[i + n]];
  }
  if (count_a != count_b) return false;

  std::vector<ArgIndex> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](ArgIndex x, ArgIndex y) { return count_a[colour[x]] < count_a[colour[y]]; });

  std::vector<int> image(n, -1);
  std::vector<bool> used(n, false);
  auto consistent = [&](std::size_t depth, ArgIndex u, ArgIndex v) {
    if (a.attacks(u, u) != b.attacks(v, v)) return false;
    for (std::size_t k = 0; k < depth; ++k) {
      const ArgIndex w = order[k];
      const auto wv = static_cast<ArgIndex>(image[w]);
      if (a.attacks(u, w) != b.attacks(v, wv) || a.attacks(w, u) != b.attacks(wv, v)) return false;
    }
    return true;
  };
  auto search = [&](auto&& self, std::size_t depth) -> bool {
    if (depth == n) return true;
    const ArgIndex u = order[depth];
    for (std::size_t v = 0; v < n; ++v) {
      if (used[v] || colour[v + n] != colour[u]) continue;
      if (!consistent(depth, u, static_cast<ArgIndex>(v))) continue;
      used[v] = true;
      image[u] = static_cast<int>(v);
      if (self(self, depth + 1)) return true;
      used[v] = false;
      image[u] = -1;
    }
    return false;
  };
  return search(search, 0);
}

/// Signature-bucketed duplicate filter. Within a bucket, frameworks under the
/// exact bound are compared exactly; larger ones are treated as duplicates on
/// signature collision.
class Deduplicator {
 public:
  explicit Deduplicator(IsomorphismLimits limits = {}) : limits_(limits) {}

  bool contains(const AF& af) const { return find(af, canonical_signature(af)); }

  /// Returns true when af was new and has been recorded.
  bool insert(const AF& af) {
    const auto sig = canonical_signature(af);
    if (find(af, sig)) return false;
    buckets_[sig].push_back(af);
    ++size_;
    return true;
  }

  std::size_t size() const noexcept { return size_; }
  std::size_t signature_only_rejections() const noexcept { return signature_only_; }

 private:
  bool find(const AF& af, std::uint64_t sig) const {
    auto it = buckets_.find(sig);
    if (it == buckets_.end()) return false;
    for (const auto& other : it->second) {
      if (af.size() <= limits_.max_arguments && other.size() <= limits_.max_arguments) {
        if (is_isomorphic_exact(af, other, limits_)) return true;
      } else {
        ++signature_only_;
        return true;
      }
    }
    return false;
  }

  IsomorphismLimits limits_;
  std::unordered_map<std::uint64_t, std::vector<AF>> buckets_;
  std::size_t size_ = 0;
  mutable std::size_t signature_only_ = 0;
};

}  // namespace argnn
