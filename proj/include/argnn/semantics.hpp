#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "argnn/af.hpp"

namespace argnn {

enum class Semantics { grounded, complete, preferred, stable };

inline constexpr std::array<Semantics, 4> all_semantics{Semantics::grounded, Semantics::complete,
                                                       Semantics::preferred, Semantics::stable};

inline std::string_view short_name(Semantics s) {
  switch (s) {
    case Semantics::grounded: return "grd";
    case Semantics::complete: return "com";
    case Semantics::preferred: return "prf";
    case Semantics::stable: return "stb";
  }
  return "?";
}

inline Semantics parse_semantics(std::string_view s) {
  if (s == "grd" || s == "grounded" || s == "GR") return Semantics::grounded;
  if (s == "com" || s == "complete" || s == "CO") return Semantics::complete;
  if (s == "prf" || s == "preferred" || s == "PR") return Semantics::preferred;
  if (s == "stb" || s == "stable" || s == "ST") return Semantics::stable;
  throw UsageError("unknown semantics '" + std::string(s) + "'");
}

enum class TriLabel : std::uint8_t { in, out, undecided };

struct SolverLimits {
  std::size_t max_arguments = 64;
};

/// Least-fixpoint labelling: `in` once every attacker is `out`, `out` once
/// some attacker is `in`, `undecided` for whatever remains.
inline std::vector<TriLabel> grounded_labelling(const AF& af) {
  const std::size_t n = af.size();
  enum : std::uint8_t { none, lin, lout };
  std::vector<std::uint8_t> lab(n, none);
  std::vector<std::size_t> out_attackers(n, 0);
  std::vector<ArgIndex> queue;
  for (std::size_t a = 0; a < n; ++a)
    if (af.attackers_of(static_cast<ArgIndex>(a)).empty()) {
      lab[a] = lin;
      queue.push_back(static_cast<ArgIndex>(a));
    }
  // Each accepted argument rejects its targets; each rejected one counts
  // towards the acceptance of its own targets.
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const ArgIndex a = queue[head];
    if (lab[a] == lin) {
      for (ArgIndex t : af.targets_of(a))
        if (lab[t] == none) {
          lab[t] = lout;
          queue.push_back(t);
        }
    } else {
      for (ArgIndex t : af.targets_of(a)) {
        if (++out_attackers[t] == af.attackers_of(t).size() && lab[t] == none) {
          lab[t] = lin;
          queue.push_back(t);
        }
      }
    }
  }
  std::vector<TriLabel> result(n, TriLabel::undecided);
  for (std::size_t a = 0; a < n; ++a)
    if (lab[a] == lin)
      result[a] = TriLabel::in;
    else if (lab[a] == lout)
      result[a] = TriLabel::out;
  return result;
}

inline ArgumentSet grounded_extension(const AF& af) {
  const auto lab = grounded_labelling(af);
  ArgumentSet s(af.size());
  for (std::size_t a = 0; a < lab.size(); ++a)
    if (lab[a] == TriLabel::in) s.insert(static_cast<ArgIndex>(a));
  return s;
}

namespace detail {

// Domain bits over {in, out, undecided}.
inline constexpr std::uint8_t kIn = 1, kOut = 2, kUnd = 4, kAll = 7;

// Backtracking search over complete labellings with domain propagation.
// Every rule below only removes labels that cannot occur in any complete
// labelling compatible with the current domains; leaves are verified.
class CompleteLabellingSearch {
 public:
  CompleteLabellingSearch(const AF& af, bool stable_only) : af_(af), stable_only_(stable_only) {}

  std::vector<ArgumentSet> run() {
    std::vector<std::uint8_t> dom(af_.size(), stable_only_ ? (kIn | kOut) : kAll);
    std::vector<ArgIndex> all(af_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<ArgIndex>(i);
    if (propagate(dom, all)) branch(dom);
    std::sort(found_.begin(), found_.end());
    found_.erase(std::unique(found_.begin(), found_.end()), found_.end());
    return std::move(found_);
  }

 private:
  static bool single(std::uint8_t d) { return d == kIn || d == kOut || d == kUnd; }

  bool restrict(std::vector<std::uint8_t>& dom, ArgIndex a, std::uint8_t mask, std::vector<ArgIndex>& work) {
    const std::uint8_t nd = dom[a] & mask;
    if (nd == dom[a]) return true;
    dom[a] = nd;
    if (nd == 0) return false;
    work.push_back(a);
    return true;
  }

  bool propagate(std::vector<std::uint8_t>& dom, std::vector<ArgIndex> work) {
    while (!work.empty()) {
      const ArgIndex x = work.back();
      work.pop_back();
      // x changed: revisit x (its rules push onto its attackers) and every
      // target of x (their rules read x as an attacker).
      if (!revise(dom, x, work)) return false;
      for (ArgIndex t : af_.targets_of(x))
        if (!revise(dom, t, work)) return false;
    }
    return true;
  }

  bool revise(std::vector<std::uint8_t>& dom, ArgIndex a, std::vector<ArgIndex>& work) {
    const auto att = af_.attackers_of(a);
    bool some_can_in = false, some_can_und = false, some_must_in = false, all_can_out = true;
    std::size_t can_in_count = 0, can_und_count = 0;
    ArgIndex last_can_in = 0, last_can_und = 0;
    for (ArgIndex b : att) {
      const std::uint8_t d = dom[b];
      if (d & kIn) {
        some_can_in = true;
        ++can_in_count;
        last_can_in = b;
      }
      if (d & kUnd) {
        some_can_und = true;
        ++can_und_count;
        last_can_und = b;
      }
      if (d == kIn) some_must_in = true;
      if (!(d & kOut)) all_can_out = false;
    }
    std::uint8_t mask = kAll;
    if (!all_can_out) mask &= static_cast<std::uint8_t>(~kIn);
    if (!some_can_in) mask &= static_cast<std::uint8_t>(~kOut);
    if (some_must_in || !some_can_und) mask &= static_cast<std::uint8_t>(~kUnd);
    if (!restrict(dom, a, mask, work)) return false;

    const std::uint8_t d = dom[a];
    if (d == kIn) {
      for (ArgIndex b : att)
        if (!restrict(dom, b, kOut, work)) return false;
    }
    if (!(d & kIn) && !(d & kOut)) {  // undecided
      for (ArgIndex b : att)
        if (!restrict(dom, b, kOut | kUnd, work)) return false;
      if (can_und_count == 1 && !restrict(dom, last_can_und, kUnd, work)) return false;
    }
    if (d == kOut && can_in_count == 1 && !restrict(dom, last_can_in, kIn, work)) return false;
    return true;
  }

  void branch(std::vector<std::uint8_t>& dom) {
    std::size_t pick = dom.size();
    for (std::size_t a = 0; a < dom.size(); ++a)
      if (!single(dom[a])) {
        pick = a;
        break;
      }
    if (pick == dom.size()) {
      if (verify(dom)) {
        ArgumentSet s(af_.size());
        for (std::size_t a = 0; a < dom.size(); ++a)
          if (dom[a] == kIn) s.insert(static_cast<ArgIndex>(a));
        found_.push_back(std::move(s));
      }
      return;
    }
    for (std::uint8_t v : {kIn, kOut, kUnd}) {
      if (!(dom[pick] & v)) continue;
      auto next = dom;
      next[pick] = v;
      if (propagate(next, {static_cast<ArgIndex>(pick)})) branch(next);
    }
  }

  bool verify(const std::vector<std::uint8_t>& dom) const {
    for (std::size_t a = 0; a < dom.size(); ++a) {
      bool any_in = false, all_out = true;
      for (ArgIndex b : af_.attackers_of(static_cast<ArgIndex>(a))) {
        any_in |= dom[b] == kIn;
        all_out &= dom[b] == kOut;
      }
      if (dom[a] == kIn && !all_out) return false;
      if (dom[a] == kOut && !any_in) return false;
      if (dom[a] == kUnd && (any_in || all_out)) return false;
    }
    return true;
  }

  const AF& af_;
  bool stable_only_;
  std::vector<ArgumentSet> found_;
};

inline std::vector<ArgumentSet> maximal_sets(const std::vector<ArgumentSet>& sets) {
  std::vector<ArgumentSet> out;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < sets.size() && !dominated; ++j)
      dominated = i != j && sets[i] != sets[j] && sets[i].is_subset_of(sets[j]);
    if (!dominated) out.push_back(sets[i]);
  }
  return out;
}

}  // namespace detail

/// All sigma-extensions, duplicate-free, in canonical (lexicographic) order.
inline std::vector<ArgumentSet> enumerate_extensions(const AF& af, Semantics sigma, const SolverLimits& limits = {}) {
  if (sigma == Semantics::grounded) return {grounded_extension(af)};
  if (af.size() > limits.max_arguments)
    throw ResourceError("framework has " + std::to_string(af.size()) + " arguments; enumeration bound is " +
                        std::to_string(limits.max_arguments));
  switch (sigma) {
    case Semantics::stable: return detail::CompleteLabellingSearch(af, true).run();
    case Semantics::complete: return detail::CompleteLabellingSearch(af, false).run();
    case Semantics::preferred: return detail::maximal_sets(detail::CompleteLabellingSearch(af, false).run());
    case Semantics::grounded: break;
  }
  return {};
}

using AcceptanceMap = std::vector<std::uint8_t>;

inline AcceptanceMap credulous_from(const AF& af, const std::vector<ArgumentSet>& exts) {
  ArgumentSet u(af.size());
  for (const auto& e : exts) u |= e;
  return u.indicator();
}

/// An empty family accepts every argument (vacuous universal quantifier).
inline AcceptanceMap sceptical_from(const AF& af, const std::vector<ArgumentSet>& exts) {
  ArgumentSet x = ArgumentSet::full(af.size());
  for (const auto& e : exts) x &= e;
  return x.indicator();
}

/// Union of the extensions that contain s; all zero when none does.
inline AcceptanceMap constructive_from(const AF& af, const std::vector<ArgumentSet>& exts, const ArgumentSet& s) {
  check_set(af, s);
  ArgumentSet u(af.size());
  for (const auto& e : exts)
    if (s.is_subset_of(e)) u |= e;
  return u.indicator();
}

inline bool is_legal(const std::vector<ArgumentSet>& exts, const ArgumentSet& s) {
  return std::any_of(exts.begin(), exts.end(), [&](const ArgumentSet& e) { return s.is_subset_of(e); });
}

inline AcceptanceMap credulous_accepted(const AF& af, Semantics sigma, const SolverLimits& limits = {}) {
  return credulous_from(af, enumerate_extensions(af, sigma, limits));
}

inline AcceptanceMap sceptical_accepted(const AF& af, Semantics sigma, const SolverLimits& limits = {}) {
  return sceptical_from(af, enumerate_extensions(af, sigma, limits));
}

inline AcceptanceMap constructively_accepted(const AF& af, Semantics sigma, const ArgumentSet& s,
                                             const SolverLimits& limits = {}) {
  return constructive_from(af, enumerate_extensions(af, sigma, limits), s);
}

/// Polynomial check that s is a complete extension.
inline bool verify_complete(const AF& af, const ArgumentSet& s) {
  if (!is_conflict_free(af, s)) return false;
  return characteristic_defended_set(af, s) == s;
}

}  // namespace argnn
