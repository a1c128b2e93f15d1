#pragma once

// Independent reference implementations used only by the tests: semantics
// straight from the set-theoretic definitions over the full powerset, and
// central finite differences.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "argnn/af.hpp"
#include "argnn/semantics.hpp"

namespace oracle {

using Mask = std::uint32_t;

struct Brute {
  std::size_t n;
  std::vector<Mask> attackers;  // attackers[a]: bitmask of b with (b, a) in R
  std::vector<Mask> targets;

  explicit Brute(const argnn::AF& af) : n(af.size()), attackers(n, 0), targets(n, 0) {
    for (const auto& [s, t] : af.attacks()) {
      attackers[t] |= Mask{1} << s;
      targets[s] |= Mask{1} << t;
    }
  }

  Mask attacked(Mask s) const {
    Mask out = 0;
    for (std::size_t a = 0; a < n; ++a)
      if (s >> a & 1) out |= targets[a];
    return out;
  }
  bool conflict_free(Mask s) const { return (attacked(s) & s) == 0; }
  Mask defended(Mask s) const {
    const Mask hit = attacked(s);
    Mask out = 0;
    for (std::size_t a = 0; a < n; ++a)
      if ((attackers[a] & ~hit) == 0) out |= Mask{1} << a;
    return out;
  }
  bool admissible(Mask s) const { return conflict_free(s) && (s & ~defended(s)) == 0; }
  bool complete(Mask s) const { return conflict_free(s) && defended(s) == s; }
  bool stable(Mask s) const {
    const Mask all = n == 32 ? ~Mask{0} : (Mask{1} << n) - 1;
    return conflict_free(s) && (attacked(s) | s) == all;
  }

  std::vector<Mask> filter(const std::function<bool(Mask)>& pred) const {
    std::vector<Mask> out;
    for (Mask s = 0; s < (Mask{1} << n); ++s)
      if (pred(s)) out.push_back(s);
    return out;
  }

  static std::vector<Mask> maximal(const std::vector<Mask>& sets) {
    std::vector<Mask> out;
    for (Mask s : sets) {
      bool dominated = false;
      for (Mask t : sets)
        if (t != s && (s & t) == s) dominated = true;
      if (!dominated) out.push_back(s);
    }
    return out;
  }

  std::vector<Mask> extensions(argnn::Semantics sigma) const {
    using argnn::Semantics;
    switch (sigma) {
      case Semantics::complete: return filter([&](Mask s) { return complete(s); });
      case Semantics::stable: return filter([&](Mask s) { return stable(s); });
      case Semantics::preferred: return maximal(filter([&](Mask s) { return admissible(s); }));
      case Semantics::grounded: {
        // The least complete extension.
        auto com = filter([&](Mask s) { return complete(s); });
        Mask least = ~Mask{0};
        for (Mask s : com) least &= s;
        return {least};
      }
    }
    return {};
  }
};

inline argnn::ArgumentSet to_set(std::size_t n, Mask m) {
  argnn::ArgumentSet s(n);
  for (std::size_t a = 0; a < n; ++a)
    if (m >> a & 1) s.insert(static_cast<argnn::ArgIndex>(a));
  return s;
}

inline std::vector<argnn::ArgumentSet> brute_extensions(const argnn::AF& af, argnn::Semantics sigma) {
  Brute b(af);
  std::vector<argnn::ArgumentSet> out;
  for (Mask m : b.extensions(sigma)) out.push_back(to_set(af.size(), m));
  std::sort(out.begin(), out.end());
  return out;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

/// The AF ({a,b,c,d}, {(a,b),(a,c),(b,c),(b,d),(c,b),(d,c)}).
inline argnn::AF fig4_af() {
  return argnn::AF(4, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 1}, {3, 2}}, {"a", "b", "c", "d"});
}

}  // namespace oracle
