#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"

#include "argnn/dataset.hpp"
#include "argnn/model.hpp"
#include "argnn/numerics/optim.hpp"

namespace argnn {

inline constexpr int kCheckpointVersion = 1;

struct TrainConfig {
  Task task = Task::credulous;
  Semantics semantics = Semantics::grounded;
  std::size_t dim = 32;
  std::size_t steps = 16;
  std::size_t batch_graphs = 50;
  double lr_max = 2e-4;
  double lr_min = 1e-7;
  std::size_t cycle_len = 0;  // in batches; 0 means four epochs' worth
  double weight_decay = 1e-9;
  double clip_norm = 0.5;
  std::size_t epochs = 20;      // upper bound; early stopping may end sooner
  std::size_t patience = 5;     // epochs without validation MCC improvement
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  // epochs between state checkpoints; 0 disables
  std::string checkpoint_dir;
  bool resample_inputs = false;  // constructive: draw fresh input sets every epoch

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"task", task_name(c.task)},
          {"semantics", short_name(c.semantics)},
          {"dim", c.dim},
          {"steps", c.steps},
          {"batch_graphs", c.batch_graphs},
          {"lr_max", c.lr_max},
          {"lr_min", c.lr_min},
          {"cycle_len", c.cycle_len},
          {"weight_decay", c.weight_decay},
          {"clip_norm", c.clip_norm},
          {"epochs", c.epochs},
          {"patience", c.patience},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every},
          {"checkpoint_dir", c.checkpoint_dir},
          {"resample_inputs", c.resample_inputs}};
}

/// Fields absent from j keep their values from `base`.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {}) {
  static const char* known[] = {"task",         "semantics", "dim",      "steps", "batch_graphs",
                                "lr_max",       "lr_min",    "cycle_len", "weight_decay", "clip_norm",
                                "epochs",       "patience",  "seed",     "checkpoint_every", "checkpoint_dir",
                                "resample_inputs", "train",        "val",       "out"};
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* name : known) ok |= k == name;
    if (!ok) throw UsageError("unknown config key '" + k + "'");
  }
  if (j.contains("task")) base.task = parse_task(j["task"].get<std::string>());
  if (j.contains("semantics")) base.semantics = parse_semantics(j["semantics"].get<std::string>());
  auto take = [&](const char* k, auto& field) {
    if (j.contains(k)) field = j[k].get<std::decay_t<decltype(field)>>();
  };
  take("dim", base.dim);
  take("steps", base.steps);
  take("batch_graphs", base.batch_graphs);
  take("lr_max", base.lr_max);
  take("lr_min", base.lr_min);
  take("cycle_len", base.cycle_len);
  take("weight_decay", base.weight_decay);
  take("clip_norm", base.clip_norm);
  take("epochs", base.epochs);
  take("patience", base.patience);
  take("seed", base.seed);
  take("checkpoint_every", base.checkpoint_every);
  take("checkpoint_dir", base.checkpoint_dir);
  take("resample_inputs", base.resample_inputs);
  return base;
}

inline void validate(const TrainConfig& c) {
  if (c.dim == 0 || c.steps == 0 || c.batch_graphs == 0 || c.epochs == 0)
    throw UsageError("dim, steps, batch_graphs and epochs must be positive");
  if (!std::isfinite(c.lr_max) || !(c.lr_max >= c.lr_min && c.lr_min >= 0)) throw UsageError("learning-rate bounds must satisfy 0 <= min <= max");
  if (c.clip_norm <= 0 || c.weight_decay < 0) throw UsageError("clip norm must be positive, weight decay non-negative");
}

inline bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

inline bool operator==(const OptimizerState& a, const OptimizerState& b) {
  auto same = [](const std::vector<Matrix>& x, const std::vector<Matrix>& y) {
    return x.size() == y.size() && std::equal(x.begin(), x.end(), y.begin(), same_matrix);
  };
  return a.step == b.step && a.config.beta1 == b.config.beta1 && a.config.beta2 == b.config.beta2 &&
         a.config.epsilon == b.config.epsilon && a.config.weight_decay == b.config.weight_decay &&
         same(a.first_moment, b.first_moment) && same(a.second_moment, b.second_moment);
}

/// Model weights plus everything needed to continue training bit-exactly.
struct Checkpoint {
  TrainConfig config;
  ModelParameters params;
  OptimizerState optimizer;
  std::string rng_state;
  std::size_t epoch = 0;  // completed epochs
  std::uint64_t global_step = 0;
  double best_val_mcc = -2.0;
  std::size_t stale_epochs = 0;
  std::optional<ModelParameters> best_params;  // present in mid-training state checkpoints

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const auto r = j.at("rows").get<Eigen::Index>();
  const auto c = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != r * c) throw ParseError("matrix data size mismatch");
  Matrix m(r, c);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

inline nlohmann::json params_to_json(const ModelParameters& p) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [n, m] : p.named()) j[n] = matrix_to_json(*m);
  return {{"dim", p.dim}, {"tensors", std::move(j)}};
}

inline ModelParameters params_from_json(const nlohmann::json& j) {
  ModelParameters p = ModelParameters::zeros(j.at("dim").get<std::size_t>());
  const auto& t = j.at("tensors");
  for (auto& [n, m] : p.named()) *m = matrix_from_json(t.at(n));
  p.check();
  return p;
}

}  // namespace detail

inline nlohmann::json to_json(const Checkpoint& c) {
  nlohmann::json m1 = nlohmann::json::array(), m2 = nlohmann::json::array();
  for (const auto& m : c.optimizer.first_moment) m1.push_back(detail::matrix_to_json(m));
  for (const auto& m : c.optimizer.second_moment) m2.push_back(detail::matrix_to_json(m));
  nlohmann::json j{{"format", "argnn-checkpoint"},
                   {"v", kCheckpointVersion},
                   {"config", to_json(c.config)},
                   {"params", detail::params_to_json(c.params)},
                   {"optimizer",
                    {{"step", c.optimizer.step},
                     {"beta1", c.optimizer.config.beta1},
                     {"beta2", c.optimizer.config.beta2},
                     {"epsilon", c.optimizer.config.epsilon},
                     {"weight_decay", c.optimizer.config.weight_decay},
                     {"first_moment", std::move(m1)},
                     {"second_moment", std::move(m2)}}},
                   {"rng", c.rng_state},
                   {"epoch", c.epoch},
                   {"global_step", c.global_step},
                   {"best_val_mcc", c.best_val_mcc},
                   {"stale_epochs", c.stale_epochs}};
  if (c.best_params) j["best_params"] = detail::params_to_json(*c.best_params);
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "argnn-checkpoint") throw ParseError("not a checkpoint file");
  if (j.at("v").get<int>() != kCheckpointVersion) throw ParseError("unsupported checkpoint version");
  Checkpoint c;
  c.config = train_config_from_json(j.at("config"));
  c.params = detail::params_from_json(j.at("params"));
  const auto& o = j.at("optimizer");
  c.optimizer.step = o.at("step").get<std::uint64_t>();
  c.optimizer.config = {o.at("beta1").get<double>(), o.at("beta2").get<double>(), o.at("epsilon").get<double>(),
                        o.at("weight_decay").get<double>()};
  for (const auto& m : o.at("first_moment")) c.optimizer.first_moment.push_back(detail::matrix_from_json(m));
  for (const auto& m : o.at("second_moment")) c.optimizer.second_moment.push_back(detail::matrix_from_json(m));
  c.rng_state = j.at("rng").get<std::string>();
  c.epoch = j.at("epoch").get<std::size_t>();
  c.global_step = j.at("global_step").get<std::uint64_t>();
  c.best_val_mcc = j.at("best_val_mcc").get<double>();
  c.stale_epochs = j.at("stale_epochs").get<std::size_t>();
  if (j.contains("best_params")) c.best_params = detail::params_from_json(j["best_params"]);
  return c;
}

inline std::string serialize(const Checkpoint& c) { return to_json(c).dump(); }

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out << serialize(c) << '\n';
  if (!out) throw RuntimeError("failed writing " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open " + path.string());
  try {
    return checkpoint_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace argnn
