#pragma once

#include <algorithm>
#include <bit>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "argnn/error.hpp"

namespace argnn {

using ArgIndex = std::uint32_t;
using Attack = std::pair<ArgIndex, ArgIndex>;

/// A subset of the arguments of one framework, stored as a bitset over the
/// dense index range [0, universe).
class ArgumentSet {
 public:
  ArgumentSet() = default;
  explicit ArgumentSet(std::size_t universe) : universe_(universe), words_((universe + 63) / 64, 0) {}
  ArgumentSet(std::size_t universe, std::initializer_list<ArgIndex> members) : ArgumentSet(universe) {
    for (ArgIndex a : members) insert(a);
  }
  ArgumentSet(std::size_t universe, std::span<const ArgIndex> members) : ArgumentSet(universe) {
    for (ArgIndex a : members) insert(a);
  }

  static ArgumentSet full(std::size_t universe) {
    ArgumentSet s(universe);
    for (std::size_t a = 0; a < universe; ++a) s.insert(static_cast<ArgIndex>(a));
    return s;
  }

  std::size_t universe() const noexcept { return universe_; }

  bool contains(ArgIndex a) const noexcept {
    return a < universe_ && ((words_[a >> 6] >> (a & 63)) & 1u);
  }
  void insert(ArgIndex a) {
    check(a);
    words_[a >> 6] |= std::uint64_t{1} << (a & 63);
  }
  void erase(ArgIndex a) {
    check(a);
    words_[a >> 6] &= ~(std::uint64_t{1} << (a & 63));
  }

  std::size_t size() const noexcept {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  bool empty() const noexcept {
    return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
  }

  std::vector<ArgIndex> members() const {
    std::vector<ArgIndex> out;
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      std::uint64_t w = words_[wi];
      while (w) {
        out.push_back(static_cast<ArgIndex>(wi * 64 + static_cast<std::size_t>(std::countr_zero(w))));
        w &= w - 1;
      }
    }
    return out;
  }

  bool is_subset_of(const ArgumentSet& other) const {
    same_universe(other);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & ~other.words_[i]) return false;
    return true;
  }
  bool intersects(const ArgumentSet& other) const {
    same_universe(other);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & other.words_[i]) return true;
    return false;
  }

  ArgumentSet& operator|=(const ArgumentSet& other) {
    same_universe(other);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
    return *this;
  }
  ArgumentSet& operator&=(const ArgumentSet& other) {
    same_universe(other);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
    return *this;
  }
  friend ArgumentSet operator|(ArgumentSet a, const ArgumentSet& b) { return a |= b; }
  friend ArgumentSet operator&(ArgumentSet a, const ArgumentSet& b) { return a &= b; }

  /// Binary membership map, one entry per argument.
  std::vector<std::uint8_t> indicator() const {
    std::vector<std::uint8_t> out(universe_, 0);
    for (ArgIndex a : members()) out[a] = 1;
    return out;
  }
  static ArgumentSet from_indicator(std::span<const std::uint8_t> labels) {
    ArgumentSet s(labels.size());
    for (std::size_t a = 0; a < labels.size(); ++a)
      if (labels[a]) s.insert(static_cast<ArgIndex>(a));
    return s;
  }

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  friend bool operator==(const ArgumentSet& a, const ArgumentSet& b) {
    return a.universe_ == b.universe_ && a.words_ == b.words_;
  }
  // Canonical order: lexicographic on the sorted member lists.
  friend std::strong_ordering operator<=>(const ArgumentSet& a, const ArgumentSet& b) {
    if (auto c = a.universe_ <=> b.universe_; c != 0) return c;
    const auto ma = a.members();
    const auto mb = b.members();
    return std::lexicographical_compare_three_way(ma.begin(), ma.end(), mb.begin(), mb.end());
  }

 private:
  void check(ArgIndex a) const {
    if (a >= universe_) throw UsageError("argument index " + std::to_string(a) + " out of range");
  }
  void same_universe(const ArgumentSet& other) const {
    if (universe_ != other.universe_) throw UsageError("argument sets over different frameworks");
  }

  std::size_t universe_ = 0;
  std::vector<std::uint64_t> words_;
};

struct ArgumentSetHash {
  std::size_t operator()(const ArgumentSet& s) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ull ^ s.universe();
    for (auto w : s.words()) {
      h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

/// A finite abstract argumentation framework (A, R) over dense indices.
/// Immutable after construction.
class ArgumentationFramework {
 public:
  ArgumentationFramework() = default;

  /// Duplicate attacks are dropped; self-attacks are kept. Names default to
  /// "a0".."a{n-1}" when not supplied.
  ArgumentationFramework(std::size_t n, std::vector<Attack> attacks, std::vector<std::string> names = {})
      : names_(std::move(names)) {
    if (names_.empty()) {
      names_.reserve(n);
      for (std::size_t i = 0; i < n; ++i) names_.push_back("a" + std::to_string(i));
    } else if (names_.size() != n) {
      throw UsageError("name count does not match argument count");
    }
    for (const auto& [s, t] : attacks)
      if (s >= n || t >= n) throw UsageError("attack endpoint out of range");
    std::sort(attacks.begin(), attacks.end());
    attacks.erase(std::unique(attacks.begin(), attacks.end()), attacks.end());
    attacks_ = std::move(attacks);

    out_.assign(n, {});
    in_.assign(n, {});
    for (const auto& [s, t] : attacks_) {
      out_[s].push_back(t);
      in_[t].push_back(s);
    }
    for (auto& v : in_) std::sort(v.begin(), v.end());
  }

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<Attack>& attacks() const noexcept { return attacks_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name(ArgIndex a) const {
    check(a);
    return names_[a];
  }

  /// Index of the argument with the given name.
  ArgIndex index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return static_cast<ArgIndex>(i);
    throw UsageError("unknown argument '" + name + "'");
  }

  /// Arguments b with (b, a) in R, ascending.
  std::span<const ArgIndex> attackers_of(ArgIndex a) const {
    check(a);
    return in_[a];
  }
  /// Arguments c with (a, c) in R, ascending.
  std::span<const ArgIndex> targets_of(ArgIndex a) const {
    check(a);
    return out_[a];
  }

  bool attacks(ArgIndex a, ArgIndex b) const {
    check(a);
    check(b);
    return std::binary_search(out_[a].begin(), out_[a].end(), b);
  }

  ArgumentSet empty_set() const { return ArgumentSet(size()); }

  ArgumentSet set_of(std::initializer_list<std::string> names) const {
    ArgumentSet s(size());
    for (const auto& n : names) s.insert(index_of(n));
    return s;
  }

  friend bool operator==(const ArgumentationFramework& a, const ArgumentationFramework& b) {
    return a.names_ == b.names_ && a.attacks_ == b.attacks_;
  }

 private:
  void check(ArgIndex a) const {
    if (a >= names_.size()) throw UsageError("argument index " + std::to_string(a) + " out of range");
  }

  std::vector<std::string> names_;
  std::vector<Attack> attacks_;
  std::vector<std::vector<ArgIndex>> out_;
  std::vector<std::vector<ArgIndex>> in_;
};

using AF = ArgumentationFramework;

inline ArgumentSet attackers(const AF& af, ArgIndex a) {
  auto in = af.attackers_of(a);
  return ArgumentSet(af.size(), in);
}

inline ArgumentSet attacked_by(const AF& af, ArgIndex a) {
  auto out = af.targets_of(a);
  return ArgumentSet(af.size(), out);
}

/// Every argument attacked by some member of s.
inline ArgumentSet attacked_by_set(const AF& af, const ArgumentSet& s) {
  ArgumentSet out(af.size());
  for (ArgIndex a : s.members())
    for (ArgIndex t : af.targets_of(a)) out.insert(t);
  return out;
}

inline void check_set(const AF& af, const ArgumentSet& s) {
  if (s.universe() != af.size()) throw UsageError("argument set does not belong to this framework");
}

inline bool is_conflict_free(const AF& af, const ArgumentSet& s) {
  check_set(af, s);
  for (ArgIndex a : s.members())
    for (ArgIndex t : af.targets_of(a))
      if (s.contains(t)) return false;
  return true;
}

inline bool defends(const AF& af, const ArgumentSet& s, ArgIndex a) {
  check_set(af, s);
  const ArgumentSet hit = attacked_by_set(af, s);
  for (ArgIndex b : af.attackers_of(a))
    if (!hit.contains(b)) return false;
  return true;
}

/// The set of arguments defended by s (the characteristic function).
inline ArgumentSet characteristic_defended_set(const AF& af, const ArgumentSet& s) {
  check_set(af, s);
  const ArgumentSet hit = attacked_by_set(af, s);
  ArgumentSet out(af.size());
  for (std::size_t a = 0; a < af.size(); ++a) {
    bool ok = true;
    for (ArgIndex b : af.attackers_of(static_cast<ArgIndex>(a)))
      if (!hit.contains(b)) {
        ok = false;
        break;
      }
    if (ok) out.insert(static_cast<ArgIndex>(a));
  }
  return out;
}

/// Relabels arguments: argument i of `af` becomes argument perm[i].
inline AF permute(const AF& af, std::span<const ArgIndex> perm) {
  const std::size_t n = af.size();
  if (perm.size() != n) throw UsageError("permutation size mismatch");
  std::vector<std::string> names(n);
  std::vector<bool> seen(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (perm[i] >= n || seen[perm[i]]) throw UsageError("not a permutation");
    seen[perm[i]] = true;
    names[perm[i]] = af.names()[i];
  }
  std::vector<Attack> att;
  att.reserve(af.attacks().size());
  for (const auto& [s, t] : af.attacks()) att.emplace_back(perm[s], perm[t]);
  return AF(n, std::move(att), std::move(names));
}

/// The running example F_e = ({a,b,c,d}, {(a,b),(b,c),(b,d),(c,d),(d,c)}).
inline AF running_example() {
  return AF(4, {{0, 1}, {1, 2}, {1, 3}, {2, 3}, {3, 2}}, {"a", "b", "c", "d"});
}

}  // namespace argnn
