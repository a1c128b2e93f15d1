// Command-line front end: generate, solve, make-dataset, train, eval,
// scaling-eval, enumerate and trace.

#include <chrono>
#include <cstdio>
#include <iomanip>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "argnn/apx.hpp"
#include "argnn/checkpoint.hpp"
#include "argnn/dataset.hpp"
#include "argnn/generators.hpp"
#include "argnn/search.hpp"
#include "argnn/semantics.hpp"
#include "argnn/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace argnn;

namespace {

constexpr int kExitOk = 0, kExitUsage = 1, kExitRuntime = 2, kExitResource = 3;

std::string hash_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (!in) break;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

/// One manifest per run: the resolved options, inputs and outputs with
/// content hashes, and wall time.
struct Manifest {
  std::string subcommand;
  json config = json::object();
  std::vector<fs::path> inputs, outputs;
  std::optional<fs::path> path;
  json extra = json::object();

  void write(double wall) const {
    if (!path) return;
    json in = json::array(), out = json::array();
    for (const auto& p : inputs) in.push_back({{"path", p.string()}, {"fnv1a64", hash_file(p)}});
    for (const auto& p : outputs)
      if (fs::is_regular_file(p)) out.push_back({{"path", p.string()}, {"fnv1a64", hash_file(p)}});
    json j{{"format", "argnn-run-manifest"}, {"v", 1},           {"version", ARGNN_VERSION},
           {"subcommand", subcommand},       {"config", config}, {"inputs", in},
           {"outputs", out},                 {"wall_time_s", wall}};
    j["seed"] = config.contains("seed") ? config["seed"] : json(nullptr);
    if (!extra.empty()) j["details"] = extra;
    std::ofstream f(*path);
    if (!f) throw RuntimeError("cannot write manifest " + path->string());
    f << j.dump(2) << '\n';
  }
};

std::vector<fs::path> apx_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".apx") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<DatasetRecord> load_dataset(const fs::path& p) {
  if (!fs::exists(p)) throw UsageError("dataset not found: " + p.string());
  return read_dataset(p);
}

Checkpoint load_model(const fs::path& p) {
  if (!fs::exists(p)) throw UsageError("checkpoint not found: " + p.string());
  return load_checkpoint(p);
}

void write_json(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw RuntimeError("cannot write " + path);
  f << j.dump(2) << '\n';
}

json set_json(const AF& af, const ArgumentSet& s) {
  json j = json::array();
  for (ArgIndex a : s.members()) j.push_back(af.name(a));
  return j;
}

json labels_json(const AF& af, const AcceptanceMap& m) {
  json j = json::object();
  for (std::size_t a = 0; a < af.size(); ++a) j[af.names()[a]] = static_cast<int>(m[a]);
  return j;
}

ArgumentSet parse_set(const AF& af, const std::string& csv) {
  ArgumentSet s(af.size());
  std::stringstream ss(csv);
  std::string name;
  while (std::getline(ss, name, ','))
    if (!name.empty()) s.insert(af.index_of(name));
  return s;
}

std::vector<std::size_t> parse_list(const std::string& csv) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoul(item));
    } catch (const std::exception&) {
      throw UsageError("not a number list: " + csv);
    }
  }
  if (out.empty()) throw UsageError("empty number list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Abstract argumentation solvers and message-passing acceptance models", "argnn"};
  app.require_subcommand(1);
  app.set_version_flag("--version",
                       std::string("argnn ") + ARGNN_VERSION + " (dataset v" + std::to_string(kDatasetVersion) +
                           ", checkpoint v" + std::to_string(kCheckpointVersion) + ", manifest v1)");
  std::string manifest_path;
  app.add_option("--manifest", manifest_path, "Where to write the run manifest");

  Manifest man;
  std::function<void()> run;

  // generate
  auto* gen = app.add_subcommand("generate", "Generate frameworks as APX files");
  std::vector<std::string> families;
  std::size_t g_count = 100, g_min = 5, g_max = 10;
  std::uint64_t g_seed = 0;
  std::string g_out;
  std::optional<double> g_p;
  bool g_no_dedup = false;
  gen->add_option("--family", families, "Generator family (repeatable; default all)");
  gen->add_option("--count", g_count)->check(CLI::PositiveNumber);
  gen->add_option("--min-args", g_min);
  gen->add_option("--max-args", g_max);
  gen->add_option("--attack-probability", g_p);
  gen->add_option("--seed", g_seed);
  gen->add_flag("--no-dedup", g_no_dedup, "Keep isomorphic repeats");
  gen->add_option("--out", g_out, "Output directory")->required();
  gen->callback([&] {
    run = [&] {
      CorpusSpec spec;
      for (const auto& f : families) spec.families.push_back(parse_family(f));
      spec.n_min = g_min;
      spec.n_max = g_max;
      spec.count = g_count;
      spec.seed = g_seed;
      spec.deduplicate = !g_no_dedup;
      spec.base.attack_probability = g_p;
      fs::create_directories(g_out);
      const auto corpus = generate_corpus(spec);
      json index = json::array();
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "af_%05zu.apx", i);
        const fs::path p = fs::path(g_out) / name;
        write_apx(corpus[i].af, p);
        man.outputs.push_back(p);
        index.push_back({{"file", name},
                         {"family", family_name(corpus[i].family)},
                         {"seed", corpus[i].seed},
                         {"arguments", corpus[i].af.size()}});
      }
      man.config = {{"families", families}, {"count", g_count}, {"min_args", g_min}, {"max_args", g_max},
                    {"seed", g_seed},       {"dedup", !g_no_dedup}};
      if (g_p) man.config["attack_probability"] = *g_p;
      man.extra["frameworks"] = index;
      if (!man.path) man.path = fs::path(g_out) / "manifest.json";
    };
  });

  // solve
  auto* solve = app.add_subcommand("solve", "Solve acceptance or enumeration on one APX file");
  std::string s_sem, s_task = "credulous", s_file, s_set;
  bool s_enum = false;
  solve->add_option("--semantics", s_sem)->required();
  solve->add_option("--task", s_task, "credulous, sceptical or constructive");
  solve->add_option("--set", s_set, "Comma-separated input set for the constructive task");
  solve->add_flag("--enumerate", s_enum, "Print all extensions instead of acceptance");
  solve->add_option("file", s_file)->required();
  solve->callback([&] {
    run = [&] {
      const AF af = read_apx(s_file);
      const Semantics sigma = parse_semantics(s_sem);
      man.inputs.push_back(s_file);
      man.config = {{"semantics", s_sem}, {"task", s_task}, {"enumerate", s_enum}, {"set", s_set}};
      if (s_enum) {
        json out = json::array();
        for (const auto& e : enumerate_extensions(af, sigma)) out.push_back(set_json(af, e));
        std::cout << out.dump() << '\n';
        return;
      }
      const Task task = parse_task(s_task);
      AcceptanceMap m;
      if (task == Task::credulous)
        m = credulous_accepted(af, sigma);
      else if (task == Task::sceptical)
        m = sceptical_accepted(af, sigma);
      else
        m = constructively_accepted(af, sigma, parse_set(af, s_set));
      std::cout << labels_json(af, m).dump() << '\n';
    };
  });

  // make-dataset
  auto* mk = app.add_subcommand("make-dataset", "Label a directory of APX files");
  std::string m_task, m_sem, m_in, m_out;
  std::uint64_t m_seed = 0;
  mk->add_option("--task", m_task)->required();
  mk->add_option("--semantics", m_sem)->required();
  mk->add_option("--in", m_in, "Directory of APX files")->required();
  mk->add_option("--out", m_out, "Output JSONL file")->required();
  mk->add_option("--seed", m_seed, "Seed for constructive input sets");
  mk->callback([&] {
    run = [&] {
      std::vector<AF> afs;
      for (const auto& p : apx_files(m_in)) {
        afs.push_back(read_apx(p));
        man.inputs.push_back(p);
      }
      Rng rng(m_seed);
      LabelStats st;
      const auto recs = label_frameworks(afs, parse_task(m_task), parse_semantics(m_sem), rng, &st);
      write_dataset(recs, fs::path(m_out));
      man.outputs.push_back(m_out);
      man.config = {{"task", m_task}, {"semantics", m_sem}, {"seed", m_seed}};
      man.extra = {{"frameworks", st.frameworks},
                   {"records", st.records},
                   {"skipped_no_extension", st.skipped_no_extension},
                   {"no_illegal_set", st.no_illegal_set}};
      if (!man.path) man.path = m_out + ".manifest.json";
    };
  });

  // train
  auto* tr = app.add_subcommand("train", "Train a model");
  std::string t_config, t_train, t_val, t_out, t_state, t_resume, t_task, t_sem;
  std::optional<std::size_t> t_epochs, t_dim, t_steps;
  std::optional<std::uint64_t> t_seed;
  std::optional<double> t_lr;
  bool t_resample = false;
  tr->add_option("--config", t_config, "JSON config file");
  tr->add_option("--train", t_train, "Training dataset (overrides config 'train')");
  tr->add_option("--val", t_val, "Validation dataset (overrides config 'val')");
  tr->add_option("--out", t_out, "Best-model checkpoint path (overrides config 'out')");
  tr->add_option("--state-out", t_state, "Final training-state checkpoint path");
  tr->add_option("--resume", t_resume, "Continue from a training-state checkpoint");
  tr->add_option("--task", t_task);
  tr->add_option("--semantics", t_sem);
  tr->add_option("--epochs", t_epochs);
  tr->add_option("--dim", t_dim);
  tr->add_option("--steps", t_steps);
  tr->add_option("--seed", t_seed);
  tr->add_option("--lr-max", t_lr);
  tr->add_flag("--resample-inputs", t_resample, "Constructive task: draw fresh input sets every epoch");
  tr->callback([&] {
    run = [&] {
      json cfg = json::object();
      if (!t_config.empty()) {
        std::ifstream f(t_config);
        if (!f) throw UsageError("cannot open config " + t_config);
        try {
          cfg = json::parse(f);
        } catch (const json::exception& e) {
          throw ParseError(std::string("config: ") + e.what());
        }
        man.inputs.push_back(t_config);
      }
      TrainConfig c = train_config_from_json(cfg);
      if (!t_task.empty()) c.task = parse_task(t_task);
      if (!t_sem.empty()) c.semantics = parse_semantics(t_sem);
      if (t_epochs) c.epochs = *t_epochs;
      if (t_dim) c.dim = *t_dim;
      if (t_steps) c.steps = *t_steps;
      if (t_seed) c.seed = *t_seed;
      if (t_lr) c.lr_max = *t_lr;
      if (t_resample) c.resample_inputs = true;
      auto pick = [&](const std::string& flag, const char* key) {
        if (!flag.empty()) return flag;
        if (cfg.contains(key)) return cfg[key].get<std::string>();
        throw UsageError(std::string("missing --") + key);
      };
      const std::string train_path = pick(t_train, "train"), val_path = pick(t_val, "val"),
                        out_path = pick(t_out, "out");
      const auto train_set = load_dataset(train_path);
      const auto val_set = load_dataset(val_path);
      man.inputs.push_back(train_path);
      man.inputs.push_back(val_path);
      std::optional<Checkpoint> resume;
      if (!t_resume.empty()) {
        resume = load_model(t_resume);
        man.inputs.push_back(t_resume);
      }
      TrainHooks hooks;
      json epochs = json::array();
      hooks.on_epoch = [&](const EpochLog& l) {
        std::cerr << "epoch " << l.epoch + 1 << "/" << c.epochs << " loss " << l.mean_loss << " val_mcc "
                  << l.val_mcc << " val_mae " << l.val_mae << '\n';
        epochs.push_back({{"epoch", l.epoch + 1}, {"loss", l.mean_loss}, {"val_mcc", l.val_mcc}, {"val_mae", l.val_mae}});
      };
      const auto res = train(c, train_set, val_set, resume ? &*resume : nullptr, hooks);
      save_checkpoint(res.best, out_path);
      man.outputs.push_back(out_path);
      if (!t_state.empty()) {
        save_checkpoint(res.final, t_state);
        man.outputs.push_back(t_state);
      }
      man.config = to_json(c);
      man.extra = {{"epochs", epochs}, {"best_val_mcc", res.best.best_val_mcc}};
      if (!man.path) man.path = out_path + ".manifest.json";
    };
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string e_ckpt, e_data, e_report;
  std::optional<std::size_t> e_steps;
  ev->add_option("--checkpoint", e_ckpt)->required();
  ev->add_option("--dataset", e_data)->required();
  ev->add_option("--steps", e_steps, "Message-passing steps (default: training value)");
  ev->add_option("--report", e_report, "Report path (default stdout)");
  ev->callback([&] {
    run = [&] {
      const auto ck = load_model(e_ckpt);
      const auto data = load_dataset(e_data);
      const std::size_t steps = e_steps ? *e_steps : ck.config.steps;
      const auto r = evaluate(ck.params, data, steps);
      json j = to_json(r);
      j["task"] = task_name(ck.config.task);
      j["semantics"] = short_name(ck.config.semantics);
      write_json(j, e_report);
      man.inputs = {e_ckpt, e_data};
      if (!e_report.empty()) man.outputs.push_back(e_report);
      man.config = {{"steps", steps}};
      man.extra = {{"wall_time_eval_s", r.wall_time_s}};
      if (!man.path && !e_report.empty()) man.path = e_report + ".manifest.json";
    };
  });

  // scaling-eval
  auto* sc = app.add_subcommand("scaling-eval", "MCC per framework size and step count");
  std::string sc_ckpt, sc_sizes, sc_steps = "2,4,8,16,32", sc_report, sc_csv;
  std::vector<std::string> sc_data;
  sc->add_option("--checkpoint", sc_ckpt)->required();
  sc->add_option("--dataset", sc_data, "Dataset files; records are grouped by size")->required();
  sc->add_option("--sizes", sc_sizes)->required();
  sc->add_option("--steps", sc_steps);
  sc->add_option("--report", sc_report, "JSON report path (default stdout)");
  sc->add_option("--csv", sc_csv, "CSV table path");
  sc->callback([&] {
    run = [&] {
      const auto ck = load_model(sc_ckpt);
      std::map<std::size_t, std::vector<DatasetRecord>> by_size;
      for (const auto& d : sc_data) {
        for (auto& r : load_dataset(d)) by_size[r.af.size()].push_back(std::move(r));
        man.inputs.push_back(d);
      }
      const auto table = scaling_eval(ck.params, by_size, parse_list(sc_sizes), parse_list(sc_steps));
      write_json(table.to_json(), sc_report);
      if (!sc_csv.empty()) {
        std::ofstream f(sc_csv);
        if (!f) throw RuntimeError("cannot write " + sc_csv);
        f << table.to_csv();
        man.outputs.push_back(sc_csv);
      }
      man.inputs.push_back(sc_ckpt);
      if (!sc_report.empty()) man.outputs.push_back(sc_report);
      man.config = {{"sizes", sc_sizes}, {"steps", sc_steps}};
      if (!man.path && !sc_report.empty()) man.path = sc_report + ".manifest.json";
    };
  });

  // enumerate
  auto* en = app.add_subcommand("enumerate", "Enumerate extensions by tree search");
  std::string en_sem, en_source = "exact", en_ckpt, en_in, en_report;
  std::optional<std::size_t> en_steps;
  std::size_t en_budget = 100000;
  bool en_no_verify = false, en_no_prune = false;
  en->add_option("--semantics", en_sem)->required();
  en->add_option("--source", en_source, "exact or model")->check(CLI::IsMember({"exact", "model"}));
  en->add_option("--checkpoint", en_ckpt, "Constructive-acceptance checkpoint for --source model");
  en->add_option("--steps", en_steps);
  en->add_option("--in", en_in, "Directory of APX files")->required();
  en->add_option("--report", en_report, "Report path (default stdout)");
  en->add_option("--node-budget", en_budget);
  en->add_flag("--no-verify", en_no_verify, "Disable complete-extension verification");
  en->add_flag("--no-prune", en_no_prune, "Disable illegal-set pruning");
  en->callback([&] {
    run = [&] {
      const Semantics sigma = parse_semantics(en_sem);
      std::unique_ptr<LabelSource> source;
      std::optional<Checkpoint> ck;
      if (en_source == "model") {
        if (en_ckpt.empty()) throw UsageError("--source model needs --checkpoint");
        ck = load_model(en_ckpt);
        if (ck->config.task != Task::constructive || ck->config.semantics != sigma)
          throw UsageError("checkpoint is not a constructive model for this semantics");
        source = std::make_unique<LearnedLabelSource>(ck->params, en_steps ? *en_steps : ck->config.steps);
        man.inputs.push_back(en_ckpt);
      } else {
        source = std::make_unique<ExactLabelSource>();
      }
      const SearchOptions opts{!en_no_verify, en_budget, !en_no_prune};
      EnumerationAccumulator acc;
      json per = json::array();
      for (const auto& p : apx_files(en_in)) {
        const AF af = read_apx(p);
        man.inputs.push_back(p);
        const auto r = enumerate_by_search(af, sigma, *source, opts);
        const auto truth = enumerate_extensions(af, sigma);
        const auto score = acc.add(r.extensions, truth);
        json found = json::array(), t = json::array();
        for (const auto& e : r.extensions) found.push_back(set_json(af, e));
        for (const auto& e : truth) t.push_back(set_json(af, e));
        per.push_back({{"file", p.filename().string()},
                       {"found", found},
                       {"truth", t},
                       {"precision", score.precision},
                       {"recall", score.recall},
                       {"nodes", r.stats.nodes},
                       {"label_calls", r.stats.label_calls},
                       {"pruned", r.stats.pruned},
                       {"incomplete", r.stats.incomplete}});
      }
      const auto total = acc.result();
      json report{{"semantics", short_name(sigma)},
                  {"source", en_source},
                  {"frameworks", total.frameworks},
                  {"mean", {{"precision", total.mean.precision}, {"recall", total.mean.recall}}},
                  {"pooled", {{"precision", total.pooled.precision}, {"recall", total.pooled.recall}}},
                  {"results", per}};
      write_json(report, en_report);
      if (!en_report.empty()) man.outputs.push_back(en_report);
      man.config = {{"semantics", en_sem}, {"source", en_source}, {"verify", !en_no_verify},
                    {"prune", !en_no_prune}, {"node_budget", en_budget}};
      if (!man.path && !en_report.empty()) man.path = en_report + ".manifest.json";
    };
  });

  // trace
  auto* trc = app.add_subcommand("trace", "Dump per-step likelihoods for one framework");
  std::string tc_ckpt, tc_file, tc_out, tc_set;
  std::optional<std::size_t> tc_steps;
  trc->add_option("--checkpoint", tc_ckpt)->required();
  trc->add_option("--steps", tc_steps);
  trc->add_option("--set", tc_set, "Input set for constructive models");
  trc->add_option("--out", tc_out, "CSV path (default stdout)");
  trc->add_option("file", tc_file)->required();
  trc->callback([&] {
    run = [&] {
      const auto ck = load_model(tc_ckpt);
      const AF af = read_apx(tc_file);
      std::optional<ArgumentSet> s;
      if (!tc_set.empty()) s = parse_set(af, tc_set);
      const auto trace = forward(ck.params, af, s ? &*s : nullptr, tc_steps ? *tc_steps : ck.config.steps);
      if (tc_out.empty()) {
        write_trace_csv(trace, std::cout);
      } else {
        dump_trace(trace, tc_out);
        man.outputs.push_back(tc_out);
        if (!man.path) man.path = tc_out + ".manifest.json";
      }
      man.inputs = {tc_ckpt, tc_file};
    };
  });

  if (argc < 2) {
    std::cerr << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    for (const auto* sub : app.get_subcommands()) man.subcommand = sub->get_name();
    if (!manifest_path.empty()) man.path = manifest_path;
    run();
    // Commands that only print to stdout still leave a manifest behind.
    if (!man.path) man.path = "argnn-" + man.subcommand + ".manifest.json";
    man.write(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    return kExitOk;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ResourceError& e) {
    std::cerr << "resource limit: " << e.what() << '\n';
    return kExitResource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
