#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "argnn/checkpoint.hpp"
#include "argnn/dataset.hpp"
#include "argnn/model.hpp"
#include "argnn/numerics/optim.hpp"
#include "argnn/random.hpp"

namespace argnn {

struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  void add(bool predicted, bool actual) {
    if (predicted && actual) ++tp;
    else if (!predicted && !actual) ++tn;
    else if (predicted) ++fp;
    else ++fn;
  }
  std::size_t total() const { return tp + tn + fp + fn; }
};

/// Matthews correlation; 0 whenever a marginal count is zero.
inline double mcc(const Confusion& c) {
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(den);
}

inline double mcc(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels) {
  if (predictions.size() != labels.size()) throw UsageError("mcc: length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) c.add(predictions[i], labels[i]);
  return mcc(c);
}

inline double mae(std::span<const double> likelihoods, std::span<const std::uint8_t> labels) {
  if (likelihoods.size() != labels.size()) throw UsageError("mae: length mismatch");
  if (labels.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) s += std::abs(likelihoods[i] - labels[i]);
  return s / static_cast<double>(labels.size());
}

struct EvalReport {
  double mcc = 0.0;
  double mae = 0.0;
  Confusion confusion;
  std::size_t steps = 0;
  std::size_t records = 0;
  double wall_time_s = 0.0;
};

/// Report JSON; wall time is left out so reports stay byte-reproducible
/// (it is recorded in the run manifest instead).
inline nlohmann::json to_json(const EvalReport& r) {
  return {{"mcc", r.mcc},
          {"mae", r.mae},
          {"tp", r.confusion.tp},
          {"tn", r.confusion.tn},
          {"fp", r.confusion.fp},
          {"fn", r.confusion.fn},
          {"steps", r.steps},
          {"records", r.records}};
}

inline std::vector<double> targets_of(const DatasetRecord& r) { return {r.labels.begin(), r.labels.end()}; }

/// Evaluates at several step counts from a single forward run of
/// max(steps) iterations (the trace at step t does not depend on later
/// steps).
inline std::vector<EvalReport> evaluate_at(const ModelParameters& p, const std::vector<DatasetRecord>& records,
                                           const std::vector<std::size_t>& step_counts, std::size_t batch_graphs = 50) {
  if (step_counts.empty()) throw UsageError("no step counts given");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t max_steps = *std::max_element(step_counts.begin(), step_counts.end());
  std::vector<Confusion> conf(step_counts.size());
  std::vector<double> abs_err(step_counts.size(), 0.0);
  std::size_t nodes = 0;
  for (std::size_t lo = 0; lo < records.size(); lo += batch_graphs) {
    const std::size_t hi = std::min(records.size(), lo + batch_graphs);
    std::vector<ForwardInput> in;
    for (std::size_t k = lo; k < hi; ++k)
      in.push_back({&records[k].af, records[k].input_set ? &*records[k].input_set : nullptr});
    const auto traces = forward_batch(p, in, max_steps);
    for (std::size_t k = lo; k < hi; ++k) {
      const auto& tr = traces[k - lo];
      const auto& y = records[k].labels;
      for (std::size_t s = 0; s < step_counts.size(); ++s) {
        const auto pred = threshold_step(tr, step_counts[s] - 1);
        for (std::size_t a = 0; a < y.size(); ++a) {
          conf[s].add(pred[a], y[a]);
          abs_err[s] += std::abs(tr.likelihood(step_counts[s] - 1, a) - y[a]);
        }
      }
      nodes += y.size();
    }
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::vector<EvalReport> out;
  for (std::size_t s = 0; s < step_counts.size(); ++s)
    out.push_back({mcc(conf[s]), nodes ? abs_err[s] / static_cast<double>(nodes) : 0.0, conf[s], step_counts[s],
                   records.size(), wall});
  return out;
}

inline EvalReport evaluate(const ModelParameters& p, const std::vector<DatasetRecord>& records, std::size_t steps,
                           std::size_t batch_graphs = 50) {
  return evaluate_at(p, records, {steps}, batch_graphs).front();
}

struct EpochLog {
  std::size_t epoch;
  double mean_loss;
  double val_mcc;
  double val_mae;
};

struct TrainResult {
  Checkpoint best;   // parameters with the best validation MCC
  Checkpoint final;  // state after the last completed epoch
  std::vector<double> batch_losses;
  std::vector<EpochLog> epochs;
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
};

namespace detail {

inline void check_records(const TrainConfig& c, const std::vector<DatasetRecord>& rs, const char* which) {
  if (rs.empty()) throw UsageError(std::string(which) + " dataset is empty");
  for (const auto& r : rs)
    if (r.task != c.task || r.semantics != c.semantics)
      throw UsageError(std::string(which) + " dataset task/semantics do not match the configuration");
}

inline std::string checkpoint_path(const TrainConfig& c, const std::string& name) {
  return (std::filesystem::path(c.checkpoint_dir) / name).string();
}

}  // namespace detail

/// Loss and parameter gradients for one batch of records.
inline std::pair<double, std::vector<Matrix>> batch_gradients(const ModelParameters& p,
                                                              std::span<const DatasetRecord* const> batch,
                                                              std::size_t steps) {
  GraphBatch g;
  std::vector<double> y;
  for (const DatasetRecord* r : batch) {
    g.add(r->af, r->input_set ? &*r->input_set : nullptr);
    y.insert(y.end(), r->labels.begin(), r->labels.end());
  }
  ad::Tape tape;
  const auto fw = forward_on_tape(tape, p, g, steps, true);
  const ad::Var loss = per_step_loss_on_tape(tape, fw, y);
  tape.backward(loss);
  std::vector<Matrix> grads;
  for (ad::Var v : fw.params.all()) grads.push_back(tape.grad(v));
  return {tape.value(loss)(0, 0), std::move(grads)};
}

/// Mini-batch training with per-step loss, global-norm clipping, AdamW and
/// a cosine cyclic schedule. Deterministic for a fixed configuration. When
/// `resume` is given, training continues from that state checkpoint.
inline TrainResult train(const TrainConfig& config, const std::vector<DatasetRecord>& train_set,
                         const std::vector<DatasetRecord>& val_set, const Checkpoint* resume = nullptr,
                         const TrainHooks& hooks = {}) {
  validate(config);
  detail::check_records(config, train_set, "training");
  detail::check_records(config, val_set, "validation");

  const std::size_t batches_per_epoch = (train_set.size() + config.batch_graphs - 1) / config.batch_graphs;
  const std::uint64_t cycle = config.cycle_len ? config.cycle_len : 4 * batches_per_epoch;

  Checkpoint state;
  Rng rng(config.seed);
  if (resume) {
    if (!(resume->config == config)) throw UsageError("resume checkpoint was written with a different configuration");
    state = *resume;
    rng.set_state(state.rng_state);
  } else {
    state.config = config;
    state.params = ModelParameters::init(config.dim, rng);
    state.optimizer.config.weight_decay = config.weight_decay;
    state.best_params = state.params;
  }
  ModelParameters best = state.best_params ? *state.best_params : state.params;

  // Resampled input sets depend only on (seed, epoch), so a resumed run
  // sees the same records as an uninterrupted one.
  const bool resample = config.resample_inputs && config.task == Task::constructive;
  std::vector<std::vector<ArgumentSet>> extensions;
  if (resample)
    for (const auto& r : train_set) extensions.push_back(enumerate_extensions(r.af, r.semantics));
  std::vector<DatasetRecord> resampled;
  const std::vector<DatasetRecord>& epoch_set = resample ? resampled : train_set;

  TrainResult result;
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = state.epoch; epoch < config.epochs; ++epoch) {
    if (state.stale_epochs >= config.patience) break;
    if (resample && epoch > 0) {
      Rng draw(Rng::derive(config.seed, 0x5e7 + epoch));
      resampled.clear();
      for (std::size_t k = 0; k < train_set.size(); ++k)
        resampled.push_back(resample_input_set(train_set[k], extensions[k], draw));
    } else if (resample) {
      resampled = train_set;
    }
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      std::vector<const DatasetRecord*> batch;
      for (std::size_t k = b * config.batch_graphs; k < std::min(train_set.size(), (b + 1) * config.batch_graphs); ++k)
        batch.push_back(&epoch_set[order[k]]);
      auto [loss, grads] = batch_gradients(state.params, batch, config.steps);
      auto abort = [&](const std::string& what) {
        if (!config.checkpoint_dir.empty())
          save_checkpoint(state, detail::checkpoint_path(config, "diagnostic.ckpt.json"));
        throw RuntimeError(what + " at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
      };
      if (!std::isfinite(loss)) abort("non-finite training loss");
      clip_global_norm(grads, config.clip_norm);
      const double lr = cosine_cyclic_lr(state.global_step, config.lr_max, config.lr_min, cycle);
      auto tensors = state.params.tensors();
      adamw_step(tensors, grads, state.optimizer, lr);
      for (const Matrix* m : tensors)
        if (!m->allFinite()) abort("non-finite parameters after update");
      ++state.global_step;
      result.batch_losses.push_back(loss);
      loss_sum += loss;
    }
    const EvalReport val = evaluate(state.params, val_set, config.steps, config.batch_graphs);
    if (val.mcc > state.best_val_mcc) {
      state.best_val_mcc = val.mcc;
      best = state.params;
      state.stale_epochs = 0;
    } else {
      ++state.stale_epochs;
    }
    state.epoch = epoch + 1;
    state.rng_state = rng.state();
    state.best_params = best;
    const EpochLog log{epoch, loss_sum / static_cast<double>(batches_per_epoch), val.mcc, val.mae};
    result.epochs.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
    if (config.checkpoint_every && !config.checkpoint_dir.empty() && state.epoch % config.checkpoint_every == 0)
      save_checkpoint(state, detail::checkpoint_path(config, "state_epoch" + std::to_string(state.epoch) + ".ckpt.json"));
  }
  state.rng_state = rng.state();
  state.best_params = best;
  result.final = state;
  result.best = state;
  result.best.params = best;
  result.best.best_params.reset();
  return result;
}

/// MCC per (framework size, step count).
struct ScalingTable {
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> steps;
  std::vector<std::vector<double>> mcc;  // [size][step]
  std::vector<std::vector<double>> mae;

  std::string to_csv() const {
    std::ostringstream os;
    os << "size,steps,mcc,mae\n";
    os.precision(17);
    for (std::size_t i = 0; i < sizes.size(); ++i)
      for (std::size_t j = 0; j < steps.size(); ++j)
        os << sizes[i] << ',' << steps[j] << ',' << mcc[i][j] << ',' << mae[i][j] << '\n';
    return os.str();
  }
  nlohmann::json to_json() const { return {{"sizes", sizes}, {"steps", steps}, {"mcc", mcc}, {"mae", mae}}; }
};

inline ScalingTable scaling_eval(const ModelParameters& p,
                                 const std::map<std::size_t, std::vector<DatasetRecord>>& datasets,
                                 const std::vector<std::size_t>& sizes, const std::vector<std::size_t>& step_counts) {
  ScalingTable t{sizes, step_counts, {}, {}};
  for (std::size_t n : sizes) {
    auto it = datasets.find(n);
    if (it == datasets.end() || it->second.empty())
      throw UsageError("no evaluation dataset for size " + std::to_string(n));
    std::vector<double> row, row_mae;
    for (const auto& r : evaluate_at(p, it->second, step_counts)) {
      row.push_back(r.mcc);
      row_mae.push_back(r.mae);
    }
    t.mcc.push_back(std::move(row));
    t.mae.push_back(std::move(row_mae));
  }
  return t;
}

}  // namespace argnn
