#pragma once

#include <algorithm>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "argnn/af.hpp"
#include "argnn/model.hpp"
#include "argnn/semantics.hpp"

namespace argnn {

/// Produces a constructive-acceptance labelling for (af, S).
class LabelSource {
 public:
  virtual ~LabelSource() = default;
  virtual AcceptanceMap labels(const AF& af, Semantics sigma, const ArgumentSet& s) = 0;
  /// Whether S is known to lie in no extension. Sources that cannot tell
  /// return false.
  virtual bool known_illegal(const AF&, Semantics, const ArgumentSet&) { return false; }
};

/// Labels from the exact solver. Extensions are computed once per
/// (framework, semantics) and reused across calls.
class ExactLabelSource : public LabelSource {
 public:
  explicit ExactLabelSource(SolverLimits limits = {}) : limits_(limits) {}

  AcceptanceMap labels(const AF& af, Semantics sigma, const ArgumentSet& s) override {
    return constructive_from(af, extensions(af, sigma), s);
  }
  bool known_illegal(const AF& af, Semantics sigma, const ArgumentSet& s) override {
    return !is_legal(extensions(af, sigma), s);
  }

 private:
  const std::vector<ArgumentSet>& extensions(const AF& af, Semantics sigma) {
    if (!cached_af_ || !(*cached_af_ == af) || cached_sigma_ != sigma) {
      cached_af_ = af;
      cached_sigma_ = sigma;
      exts_ = enumerate_extensions(af, sigma, limits_);
    }
    return exts_;
  }

  SolverLimits limits_;
  std::optional<AF> cached_af_;
  Semantics cached_sigma_ = Semantics::grounded;
  std::vector<ArgumentSet> exts_;
};

/// Labels from a trained constructive-acceptance model. The model is bound
/// to the semantics it was trained for; the sigma argument is ignored.
class LearnedLabelSource : public LabelSource {
 public:
  LearnedLabelSource(const ModelParameters& params, std::size_t steps) : params_(&params), steps_(steps) {}

  AcceptanceMap labels(const AF& af, Semantics, const ArgumentSet& s) override {
    return predict(*params_, af, &s, steps_);
  }

 private:
  const ModelParameters* params_;
  std::size_t steps_;
};

struct SearchOptions {
  bool verify_complete = true;
  std::size_t node_budget = 100000;
  bool prune = true;
};

struct SearchStats {
  std::size_t label_calls = 0;
  std::size_t nodes = 0;
  std::size_t pruned = 0;
  std::size_t verified = 0;
  bool incomplete = false;
};

struct SearchResult {
  std::vector<ArgumentSet> extensions;
  SearchStats stats;
};

/// True when some member of S is labelled rejected.
inline bool prune_illegal(const ArgumentSet& s, const AcceptanceMap& labels) {
  for (ArgIndex a : s.members())
    if (!labels[a]) return true;
  return false;
}

/// Depth-first enumeration from the empty set, adding constructively
/// accepted arguments one at a time. A node whose accepted set equals S is
/// a leaf and is reported. Under grounded semantics only the first
/// expandable argument is followed, so the search is a single chain.
inline SearchResult enumerate_by_search(const AF& af, Semantics sigma, LabelSource& source,
                                        const SearchOptions& opts = {}) {
  SearchResult r;
  std::unordered_set<ArgumentSet, ArgumentSetHash> visited;
  std::unordered_set<ArgumentSet, ArgumentSetHash> found;
  std::vector<ArgumentSet> stack{af.empty_set()};
  visited.insert(stack.back());
  const bool verify = sigma == Semantics::complete && opts.verify_complete;

  while (!stack.empty()) {
    if (r.stats.nodes >= opts.node_budget) {
      r.stats.incomplete = true;
      break;
    }
    ArgumentSet s = std::move(stack.back());
    stack.pop_back();
    ++r.stats.nodes;
    if (verify && verify_complete(af, s)) {
      ++r.stats.verified;
      found.insert(s);
    }
    if (s.empty() && source.known_illegal(af, sigma, s)) continue;
    const AcceptanceMap labels = source.labels(af, sigma, s);
    ++r.stats.label_calls;
    if (labels.size() != af.size()) throw RuntimeError("label source returned the wrong number of labels");
    if (opts.prune && prune_illegal(s, labels)) {
      ++r.stats.pruned;
      continue;
    }
    const ArgumentSet accepted = ArgumentSet::from_indicator(labels);
    ArgumentSet expandable = accepted;
    for (ArgIndex a : s.members()) expandable.erase(a);
    if (expandable.empty()) {
      if (accepted == s) found.insert(s);
      continue;
    }
    auto children = expandable.members();
    if (sigma == Semantics::grounded) children.resize(1);
    // Pushed in reverse so the smallest index is expanded first.
    for (auto it = children.rbegin(); it != children.rend(); ++it) {
      ArgumentSet child = s;
      child.insert(*it);
      if (visited.insert(child).second) stack.push_back(std::move(child));
    }
  }
  r.extensions.assign(found.begin(), found.end());
  std::sort(r.extensions.begin(), r.extensions.end());
  return r;
}

struct EnumerationScore {
  double precision = 1.0;
  double recall = 1.0;
};

/// Set-level precision and recall. An empty found set has precision 1; an
/// empty truth has recall 1.
inline EnumerationScore enumeration_metrics(const std::vector<ArgumentSet>& found,
                                            const std::vector<ArgumentSet>& truth) {
  std::unordered_set<ArgumentSet, ArgumentSetHash> t(truth.begin(), truth.end());
  std::unordered_set<ArgumentSet, ArgumentSetHash> f(found.begin(), found.end());
  std::size_t hit = 0;
  for (const auto& s : f) hit += t.count(s);
  EnumerationScore e;
  if (!f.empty()) e.precision = static_cast<double>(hit) / static_cast<double>(f.size());
  if (!t.empty()) e.recall = static_cast<double>(hit) / static_cast<double>(t.size());
  return e;
}

/// Both aggregations over a corpus: mean of per-framework scores, and
/// pooled counts.
struct CorpusEnumerationScore {
  EnumerationScore mean;
  EnumerationScore pooled;
  std::size_t frameworks = 0;
};

class EnumerationAccumulator {
 public:
  EnumerationScore add(const std::vector<ArgumentSet>& found, const std::vector<ArgumentSet>& truth) {
    const auto e = enumeration_metrics(found, truth);
    sum_p_ += e.precision;
    sum_r_ += e.recall;
    ++n_;
    std::unordered_set<ArgumentSet, ArgumentSetHash> t(truth.begin(), truth.end());
    std::unordered_set<ArgumentSet, ArgumentSetHash> f(found.begin(), found.end());
    for (const auto& s : f) hits_ += t.count(s);
    found_ += f.size();
    truth_ += t.size();
    return e;
  }

  CorpusEnumerationScore result() const {
    CorpusEnumerationScore c;
    c.frameworks = n_;
    if (n_) c.mean = {sum_p_ / static_cast<double>(n_), sum_r_ / static_cast<double>(n_)};
    if (found_) c.pooled.precision = static_cast<double>(hits_) / static_cast<double>(found_);
    if (truth_) c.pooled.recall = static_cast<double>(hits_) / static_cast<double>(truth_);
    return c;
  }

 private:
  double sum_p_ = 0, sum_r_ = 0;
  std::size_t n_ = 0, hits_ = 0, found_ = 0, truth_ = 0;
};

}  // namespace argnn
