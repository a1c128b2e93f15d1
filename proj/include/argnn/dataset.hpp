#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "argnn/af.hpp"
#include "argnn/isomorphism.hpp"
#include "argnn/random.hpp"
#include "argnn/semantics.hpp"

namespace argnn {

enum class Task { credulous, sceptical, constructive };

inline std::string_view task_name(Task t) {
  switch (t) {
    case Task::credulous: return "credulous";
    case Task::sceptical: return "sceptical";
    case Task::constructive: return "constructive";
  }
  return "?";
}

inline Task parse_task(std::string_view s) {
  if (s == "credulous" || s == "cred" || s == "DC") return Task::credulous;
  if (s == "sceptical" || s == "skeptical" || s == "scept" || s == "DS") return Task::sceptical;
  if (s == "constructive" || s == "constr") return Task::constructive;
  throw UsageError("unknown task '" + std::string(s) + "'");
}

inline constexpr int kDatasetVersion = 1;

/// One supervised instance. `input_set` and `legal` are present exactly for
/// the constructive task.
struct DatasetRecord {
  AF af;
  Task task = Task::credulous;
  Semantics semantics = Semantics::grounded;
  std::optional<ArgumentSet> input_set;
  std::vector<std::uint8_t> labels;
  std::optional<bool> legal;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

/// Throws UsageError when a record violates the schema invariants.
inline void validate(const DatasetRecord& r) {
  if (r.labels.size() != r.af.size()) throw UsageError("label count does not match argument count");
  for (auto l : r.labels)
    if (l > 1) throw UsageError("labels must be binary");
  const bool constructive = r.task == Task::constructive;
  if (constructive != r.input_set.has_value() || constructive != r.legal.has_value())
    throw UsageError("input_set/legal must be present exactly for the constructive task");
  if (!constructive) return;
  if (r.input_set->universe() != r.af.size()) throw UsageError("input set does not match framework");
  if (!*r.legal) {
    for (auto l : r.labels)
      if (l) throw UsageError("illegal input set must have all-zero labels");
  } else {
    for (ArgIndex a : r.input_set->members())
      if (!r.labels[a]) throw UsageError("legal input set must be contained in the accepted labels");
  }
}

inline DatasetRecord build_acceptance_record(const AF& af, Semantics sigma, Task task, const SolverLimits& limits = {}) {
  DatasetRecord r;
  r.af = af;
  r.task = task;
  r.semantics = sigma;
  if (task == Task::credulous)
    r.labels = credulous_accepted(af, sigma, limits);
  else if (task == Task::sceptical)
    r.labels = sceptical_accepted(af, sigma, limits);
  else
    throw UsageError("acceptance records are credulous or sceptical");
  return r;
}

struct ConstructivePair {
  DatasetRecord legal;
  std::optional<DatasetRecord> illegal;
};

struct ConstructiveOptions {
  std::size_t illegal_attempts = 200;
};

/// Labels for a constructive record: union of the extensions containing s.
inline DatasetRecord make_constructive_record(const AF& af, Semantics sigma, const std::vector<ArgumentSet>& exts,
                                              ArgumentSet s) {
  DatasetRecord r;
  r.af = af;
  r.task = Task::constructive;
  r.semantics = sigma;
  r.legal = is_legal(exts, s);
  r.labels = constructive_from(af, exts, s);
  r.input_set = std::move(s);
  return r;
}

namespace detail {

inline ArgumentSet random_subset(const ArgumentSet& e, Rng& rng) {
  ArgumentSet s(e.universe());
  for (ArgIndex a : e.members())
    if (rng.bernoulli(0.5)) s.insert(a);
  return s;
}

/// Rejection-samples a set contained in no extension. Proposals alternate
/// between a uniformly sized random subset and a legal subset extended by
/// one argument outside its constructive labels.
inline std::optional<ArgumentSet> sample_illegal_set(const AF& af, const std::vector<ArgumentSet>& exts, Rng& rng,
                                                     const ConstructiveOptions& opt) {
  const std::size_t n = af.size();
  for (std::size_t attempt = 0; attempt < opt.illegal_attempts && n > 0; ++attempt) {
    ArgumentSet s(n);
    if (attempt % 2 == 0) {
      const std::size_t k = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(n)));
      std::vector<ArgIndex> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<ArgIndex>(i);
      rng.shuffle(idx);
      for (std::size_t i = 0; i < k; ++i) s.insert(idx[i]);
    } else {
      s = random_subset(exts[rng.below(exts.size())], rng);
      const auto lab = constructive_from(af, exts, s);
      std::vector<ArgIndex> outside;
      for (std::size_t a = 0; a < n; ++a)
        if (!lab[a]) outside.push_back(static_cast<ArgIndex>(a));
      if (outside.empty()) continue;
      s.insert(outside[rng.below(outside.size())]);
    }
    if (!is_legal(exts, s)) return s;
  }
  return std::nullopt;
}

}  // namespace detail

/// A legal record (random subset of a uniformly chosen extension) and, when
/// one can be found by rejection sampling, an illegal record. `exts` must be
/// the non-empty extension family of af under sigma.
inline ConstructivePair sample_constructive_records(const AF& af, Semantics sigma, const std::vector<ArgumentSet>& exts,
                                                    Rng& rng, const ConstructiveOptions& opt = {}) {
  if (exts.empty()) throw UsageError("constructive records need at least one extension");
  ConstructivePair pair{
      make_constructive_record(af, sigma, exts, detail::random_subset(exts[rng.below(exts.size())], rng)), {}};
  if (auto s = detail::sample_illegal_set(af, exts, rng, opt))
    pair.illegal = make_constructive_record(af, sigma, exts, std::move(*s));
  return pair;
}

/// As above, computing the extensions. Returns nullopt when sigma has no
/// extensions on af.
inline std::optional<ConstructivePair> build_constructive_records(const AF& af, Semantics sigma, Rng& rng,
                                                                  const ConstructiveOptions& opt = {},
                                                                  const SolverLimits& limits = {}) {
  const auto exts = enumerate_extensions(af, sigma, limits);
  if (exts.empty()) return std::nullopt;
  return sample_constructive_records(af, sigma, exts, rng, opt);
}

/// A fresh input set of the same legality as r. An illegal record is kept
/// unchanged when no other illegal set turns up.
inline DatasetRecord resample_input_set(const DatasetRecord& r, const std::vector<ArgumentSet>& exts, Rng& rng,
                                        const ConstructiveOptions& opt = {}) {
  if (r.task != Task::constructive || !r.legal) throw UsageError("only constructive records have input sets");
  if (*r.legal)
    return make_constructive_record(r.af, r.semantics, exts, detail::random_subset(exts[rng.below(exts.size())], rng));
  if (auto s = detail::sample_illegal_set(r.af, exts, rng, opt))
    return make_constructive_record(r.af, r.semantics, exts, std::move(*s));
  return r;
}

struct LabelStats {
  std::size_t frameworks = 0;
  std::size_t records = 0;
  std::size_t skipped_no_extension = 0;  // constructive: no extension to sample from
  std::size_t no_illegal_set = 0;        // constructive: rejection sampling found no illegal set
};

/// Labels every framework for the task. The constructive task yields up to
/// two records per framework; `rng` supplies the sampled input sets.
inline std::vector<DatasetRecord> label_frameworks(const std::vector<AF>& afs, Task task, Semantics sigma, Rng& rng,
                                                   LabelStats* stats = nullptr, const ConstructiveOptions& opt = {},
                                                   const SolverLimits& limits = {}) {
  LabelStats local;
  LabelStats& st = stats ? *stats : local;
  std::vector<DatasetRecord> out;
  for (const AF& af : afs) {
    ++st.frameworks;
    if (task != Task::constructive) {
      out.push_back(build_acceptance_record(af, sigma, task, limits));
      continue;
    }
    auto pair = build_constructive_records(af, sigma, rng, opt, limits);
    if (!pair) {
      ++st.skipped_no_extension;
      continue;
    }
    out.push_back(std::move(pair->legal));
    if (pair->illegal)
      out.push_back(std::move(*pair->illegal));
    else
      ++st.no_illegal_set;
  }
  st.records += out.size();
  return out;
}

/// Re-derives the labels from the exact solvers and compares.
inline bool audit_record(const DatasetRecord& r, const SolverLimits& limits = {}) {
  const auto exts = enumerate_extensions(r.af, r.semantics, limits);
  switch (r.task) {
    case Task::credulous: return r.labels == credulous_from(r.af, exts);
    case Task::sceptical: return r.labels == sceptical_from(r.af, exts);
    case Task::constructive:
      return r.input_set && r.legal && *r.legal == is_legal(exts, *r.input_set) &&
             r.labels == constructive_from(r.af, exts, *r.input_set);
  }
  return false;
}

/// True when no framework of `a` is isomorphic to one of `b`.
inline bool splits_disjoint(const std::vector<DatasetRecord>& a, const std::vector<DatasetRecord>& b) {
  Deduplicator seen;
  for (const auto& r : a) seen.insert(r.af);
  for (const auto& r : b)
    if (seen.contains(r.af)) return false;
  return true;
}

// JSON-lines schema, one record per line:
//   {"v":1,"task":"credulous","semantics":"grd",
//    "af":{"args":["a","b"],"attacks":[[0,1]]},
//    "labels":[1,0], "input_set":[0], "legal":true}
// input_set (argument indices) and legal appear only for the constructive task.

inline nlohmann::json af_to_json(const AF& af) {
  nlohmann::json att = nlohmann::json::array();
  for (const auto& [s, t] : af.attacks()) att.push_back({s, t});
  return {{"args", af.names()}, {"attacks", std::move(att)}};
}

inline AF af_from_json(const nlohmann::json& j) {
  auto names = j.at("args").get<std::vector<std::string>>();
  std::vector<Attack> att;
  for (const auto& p : j.at("attacks")) {
    if (!p.is_array() || p.size() != 2) throw UsageError("attack must be an index pair");
    att.emplace_back(p[0].get<ArgIndex>(), p[1].get<ArgIndex>());
  }
  const std::size_t n = names.size();
  return AF(n, std::move(att), std::move(names));
}

inline nlohmann::json record_to_json(const DatasetRecord& r) {
  nlohmann::json j{{"v", kDatasetVersion},
                   {"task", task_name(r.task)},
                   {"semantics", short_name(r.semantics)},
                   {"af", af_to_json(r.af)},
                   {"labels", r.labels}};
  if (r.input_set) j["input_set"] = r.input_set->members();
  if (r.legal) j["legal"] = *r.legal;
  return j;
}

inline DatasetRecord record_from_json(const nlohmann::json& j) {
  if (j.at("v").get<int>() != kDatasetVersion) throw UsageError("unsupported dataset version");
  DatasetRecord r;
  r.af = af_from_json(j.at("af"));
  r.task = parse_task(j.at("task").get<std::string>());
  r.semantics = parse_semantics(j.at("semantics").get<std::string>());
  r.labels = j.at("labels").get<std::vector<std::uint8_t>>();
  if (j.contains("input_set")) {
    ArgumentSet s(r.af.size());
    for (const auto& a : j["input_set"]) s.insert(a.get<ArgIndex>());
    r.input_set = std::move(s);
  }
  if (j.contains("legal")) r.legal = j["legal"].get<bool>();
  validate(r);
  return r;
}

inline void write_dataset(const std::vector<DatasetRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

inline void write_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write " + path.string());
  write_dataset(records, out);
}

inline std::vector<DatasetRecord> read_dataset(std::istream& in) {
  std::vector<DatasetRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

inline std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open " + path.string());
  return read_dataset(in);
}

}  // namespace argnn
