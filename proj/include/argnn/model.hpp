#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "argnn/af.hpp"
#include "argnn/numerics/layers.hpp"
#include "argnn/numerics/optim.hpp"
#include "argnn/numerics/tape.hpp"

namespace argnn {

/// Learnable weights of the recurrent message-passing model.
///
/// Every node starts from `embedding` (or `member_embedding` when it belongs
/// to the input set of a constructive query). Each step, node i receives
///   m_i = sum_{(i,j) in R} message_source(v_i, v_j) + sum_{(k,i) in R} message_target(v_i, v_k)
/// and the recurrent cell consumes [m_i; x_i]; its hidden output becomes the
/// new embedding v_i, which `readout` maps to an acceptance logit.
struct ModelParameters {
  std::size_t dim = 0;
  Matrix embedding;         // 1 x d
  Matrix member_embedding;  // 1 x d
  MlpParams message_source;  // 2d -> d -> d
  MlpParams message_target;  // 2d -> d -> d
  LstmParams update;         // input 2d, hidden d
  MlpParams readout;         // d -> d -> 1

  static ModelParameters init(std::size_t d, Rng& rng) {
    const auto D = static_cast<Eigen::Index>(d);
    ModelParameters p;
    p.dim = d;
    p.embedding = uniform_matrix(1, D, 1.0, rng);
    p.member_embedding = uniform_matrix(1, D, 1.0, rng);
    p.message_source = MlpParams::init(2 * D, D, D, rng);
    p.message_target = MlpParams::init(2 * D, D, D, rng);
    p.update = LstmParams::init(2 * D, D, rng);
    p.readout = MlpParams::init(D, D, 1, rng);
    return p;
  }

  static ModelParameters zeros(std::size_t d) {
    const auto D = static_cast<Eigen::Index>(d);
    ModelParameters p;
    p.dim = d;
    p.embedding = Matrix::Zero(1, D);
    p.member_embedding = Matrix::Zero(1, D);
    p.message_source = MlpParams::zeros(2 * D, D, D);
    p.message_target = MlpParams::zeros(2 * D, D, D);
    p.update = LstmParams::zeros(2 * D, D);
    p.readout = MlpParams::zeros(D, D, 1);
    return p;
  }

  std::vector<std::pair<std::string, Matrix*>> named() {
    return {{"embedding", &embedding},
            {"member_embedding", &member_embedding},
            {"message_source.w1", &message_source.w1},
            {"message_source.b1", &message_source.b1},
            {"message_source.w2", &message_source.w2},
            {"message_source.b2", &message_source.b2},
            {"message_target.w1", &message_target.w1},
            {"message_target.b1", &message_target.b1},
            {"message_target.w2", &message_target.w2},
            {"message_target.b2", &message_target.b2},
            {"update.w_input", &update.w_input},
            {"update.w_hidden", &update.w_hidden},
            {"update.bias", &update.bias},
            {"readout.w1", &readout.w1},
            {"readout.b1", &readout.b1},
            {"readout.w2", &readout.w2},
            {"readout.b2", &readout.b2}};
  }
  std::vector<std::pair<std::string, const Matrix*>> named() const {
    auto m = const_cast<ModelParameters*>(this)->named();
    std::vector<std::pair<std::string, const Matrix*>> out;
    out.reserve(m.size());
    for (auto& [n, p] : m) out.emplace_back(n, p);
    return out;
  }
  std::vector<Matrix*> tensors() {
    std::vector<Matrix*> out;
    for (auto& [n, p] : named()) out.push_back(p);
    return out;
  }

  void check() const {
    const auto D = static_cast<Eigen::Index>(dim);
    require_shape(embedding, 1, D, "embedding");
    require_shape(member_embedding, 1, D, "member_embedding");
    for (const MlpParams* m : {&message_source, &message_target}) {
      require_shape(m->w1, 2 * D, D, "message w1");
      require_shape(m->w2, D, D, "message w2");
      m->check();
    }
    require_shape(update.w_input, 2 * D, 4 * D, "update w_input");
    update.check();
    require_shape(readout.w1, D, D, "readout w1");
    require_shape(readout.w2, D, 1, "readout w2");
    readout.check();
    for (const auto& [n, p] : named())
      if (!p->allFinite()) throw UsageError("parameter " + n + " is not finite");
  }

  friend bool operator==(const ModelParameters& a, const ModelParameters& b) {
    if (a.dim != b.dim) return false;
    auto na = a.named();
    auto nb = b.named();
    for (std::size_t i = 0; i < na.size(); ++i)
      if (na[i].second->rows() != nb[i].second->rows() || na[i].second->cols() != nb[i].second->cols() ||
          *na[i].second != *nb[i].second)
        return false;
    return true;
  }
};

/// Disjoint union of frameworks, with per-direction edge lists sorted by
/// (receiving node, neighbour) so messages are summed in ascending
/// neighbour order.
struct GraphBatch {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> offsets;  // first node of each framework, plus a final end marker
  std::vector<std::uint32_t> member;  // 1 for nodes in the input set
  std::vector<std::uint32_t> source_self, source_neighbour;  // (i, j) for (i, j) in R
  std::vector<std::uint32_t> target_self, target_neighbour;  // (i, k) for (k, i) in R

  void add(const AF& af, const ArgumentSet* input_set = nullptr) {
    if (offsets.empty()) offsets.push_back(0);
    if (input_set) check_set(af, *input_set);
    const auto base = static_cast<std::uint32_t>(num_nodes);
    for (std::size_t a = 0; a < af.size(); ++a) {
      const auto ai = static_cast<ArgIndex>(a);
      member.push_back(input_set && input_set->contains(ai) ? 1u : 0u);
      for (ArgIndex t : af.targets_of(ai)) {
        source_self.push_back(base + ai);
        source_neighbour.push_back(base + t);
      }
      for (ArgIndex k : af.attackers_of(ai)) {
        target_self.push_back(base + ai);
        target_neighbour.push_back(base + k);
      }
    }
    num_nodes += af.size();
    offsets.push_back(num_nodes);
  }

  std::size_t graphs() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

struct ParameterVars {
  ad::Var embedding, member_embedding;
  ad::MlpVars message_source, message_target, readout;
  ad::LstmVars update;

  std::vector<ad::Var> all() const {
    return {embedding,          member_embedding,   message_source.w1,  message_source.b1, message_source.w2,
            message_source.b2,  message_target.w1,  message_target.b1,  message_target.w2, message_target.b2,
            update.w_input,     update.w_hidden,    update.bias,        readout.w1,        readout.b1,
            readout.w2,         readout.b2};
  }
};

inline ParameterVars parameter_leaves(ad::Tape& t, const ModelParameters& p, bool grad) {
  return {t.leaf(p.embedding, grad),          t.leaf(p.member_embedding, grad), ad::leaves(t, p.message_source, grad),
          ad::leaves(t, p.message_target, grad), ad::leaves(t, p.readout, grad),   ad::leaves(t, p.update, grad)};
}

struct TapeForward {
  ParameterVars params;
  std::vector<ad::Var> logits;  // one (nodes x 1) value per step
};

/// Records `steps` message-passing iterations for the batch on the tape.
inline TapeForward forward_on_tape(ad::Tape& t, const ModelParameters& p, const GraphBatch& g, std::size_t steps,
                                   bool grad) {
  using namespace ad;
  if (steps == 0) throw UsageError("forward needs at least one message-passing step");
  p.check();
  const auto D = static_cast<Eigen::Index>(p.dim);
  const auto N = static_cast<Eigen::Index>(g.num_nodes);
  TapeForward out{parameter_leaves(t, p, grad), {}};
  const ParameterVars& v = out.params;

  const Var x = gather_rows(t, concat_rows(t, v.embedding, v.member_embedding), g.member);
  const Var w_message = slice_rows(t, v.update.w_input, 0, D);
  const Var x_proj = add_row(t, matmul(t, x, slice_rows(t, v.update.w_input, D, D)), v.update.bias);

  struct Direction {
    Var w_self, w_neighbour;
    const MlpVars* mlp;
    const std::vector<std::uint32_t>* self;
    const std::vector<std::uint32_t>* neighbour;
    Var degree;  // N x 1 count of messages received
  };
  auto degree_of = [&](const std::vector<std::uint32_t>& self) {
    Matrix deg = Matrix::Zero(N, 1);
    for (auto i : self) deg(i, 0) += 1.0;
    return t.leaf(std::move(deg));
  };
  // The first layer acts on [v_i; v_j], so it splits into a self part and a
  // neighbour part applied per node before gathering along edges.
  const Direction dirs[2] = {
      {slice_rows(t, v.message_source.w1, 0, D), slice_rows(t, v.message_source.w1, D, D), &v.message_source,
       &g.source_self, &g.source_neighbour, degree_of(g.source_self)},
      {slice_rows(t, v.message_target.w1, 0, D), slice_rows(t, v.message_target.w1, D, D), &v.message_target,
       &g.target_self, &g.target_neighbour, degree_of(g.target_self)}};

  CellVars state{t.leaf(Matrix::Zero(N, D)), t.leaf(Matrix::Zero(N, D))};
  Var emb = x;
  for (std::size_t step = 0; step < steps; ++step) {
    std::optional<Var> m;
    for (const auto& d : dirs) {
      if (d.self->empty()) continue;
      Var ps = matmul(t, emb, d.w_self);
      Var pn = matmul(t, emb, d.w_neighbour);
      Var h = relu(t, add_row(t, add(t, gather_rows(t, ps, *d.self), gather_rows(t, pn, *d.neighbour)), d.mlp->b1));
      // The second layer is affine, so summing hidden rows per receiver
      // first gives sum_e (h_e W2 + b2) = (sum_e h_e) W2 + deg * b2.
      Var agg = add(t, matmul(t, scatter_add_rows(t, h, *d.self, N), d.mlp->w2), matmul(t, d.degree, d.mlp->b2));
      m = m ? add(t, *m, agg) : agg;
    }
    const Var message = m ? *m : t.leaf(Matrix::Zero(N, D));
    state = lstm_step(t, v.update, D, state, add(t, matmul(t, message, w_message), x_proj));
    emb = state.hidden;
    out.logits.push_back(mlp(t, v.readout, emb));
  }
  return out;
}

/// Per-step logits of one framework: logits(t - 1, i) is o_i^t.
struct ForwardTrace {
  Matrix logits;  // steps x n
  std::vector<std::string> names;

  std::size_t steps() const { return static_cast<std::size_t>(logits.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(logits.cols()); }
  double logit(std::size_t step, std::size_t arg) const {
    return logits(static_cast<Eigen::Index>(step), static_cast<Eigen::Index>(arg));
  }
  double likelihood(std::size_t step, std::size_t arg) const { return sigmoid(logit(step, arg)); }
};

struct ForwardInput {
  const AF* af;
  const ArgumentSet* input_set = nullptr;
};

/// Runs the frameworks as one disjoint-union batch and splits the traces.
inline std::vector<ForwardTrace> forward_batch(const ModelParameters& p, std::span<const ForwardInput> inputs,
                                               std::size_t steps) {
  GraphBatch g;
  for (const auto& in : inputs) g.add(*in.af, in.input_set);
  ad::Tape tape;
  const auto fw = forward_on_tape(tape, p, g, steps, false);
  std::vector<ForwardTrace> out(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto lo = static_cast<Eigen::Index>(g.offsets[k]);
    const auto n = static_cast<Eigen::Index>(g.offsets[k + 1] - g.offsets[k]);
    out[k].logits.resize(static_cast<Eigen::Index>(steps), n);
    for (std::size_t s = 0; s < steps; ++s)
      out[k].logits.row(static_cast<Eigen::Index>(s)) = tape.value(fw.logits[s]).col(0).segment(lo, n).transpose();
    out[k].names = inputs[k].af->names();
  }
  return out;
}

inline ForwardTrace forward(const ModelParameters& p, const AF& af, const ArgumentSet* input_set, std::size_t steps) {
  const ForwardInput in{&af, input_set};
  return std::move(forward_batch(p, std::span(&in, 1), steps).front());
}

/// Final-step likelihoods thresholded; exactly-at-threshold rejects.
inline std::vector<std::uint8_t> threshold_step(const ForwardTrace& trace, std::size_t step, double threshold = 0.5) {
  std::vector<std::uint8_t> out(trace.size());
  for (std::size_t a = 0; a < trace.size(); ++a) out[a] = trace.likelihood(step, a) > threshold ? 1 : 0;
  return out;
}

inline std::vector<std::uint8_t> predict(const ModelParameters& p, const AF& af, const ArgumentSet* input_set,
                                         std::size_t steps, double threshold = 0.5) {
  const auto trace = forward(p, af, input_set, steps);
  return threshold_step(trace, steps - 1, threshold);
}

/// Mean over steps of the per-step binary cross entropy.
inline double per_step_loss(const ForwardTrace& trace, std::span<const std::uint8_t> labels) {
  if (labels.size() != trace.size()) throw UsageError("per_step_loss: label count mismatch");
  if (trace.steps() == 0) throw UsageError("per_step_loss: empty trace");
  std::vector<double> y(labels.begin(), labels.end());
  double s = 0.0;
  std::vector<double> o(trace.size());
  for (std::size_t t = 0; t < trace.steps(); ++t) {
    for (std::size_t a = 0; a < trace.size(); ++a) o[a] = trace.logit(t, a);
    s += bce_loss(o, y);
  }
  return s / static_cast<double>(trace.steps());
}

/// Tape version of per_step_loss over a batch; targets cover all batch nodes.
inline ad::Var per_step_loss_on_tape(ad::Tape& t, const TapeForward& fw, std::span<const double> targets) {
  std::vector<ad::Var> per_step;
  per_step.reserve(fw.logits.size());
  for (ad::Var l : fw.logits) per_step.push_back(ad::bce_with_logits(t, l, targets));
  return ad::mean(t, per_step);
}

inline void write_trace_csv(const ForwardTrace& trace, std::ostream& out) {
  out << "step,argument,logit,likelihood\n";
  char buf[64];
  auto num = [&](double x) {
    auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
  };
  for (std::size_t t = 0; t < trace.steps(); ++t)
    for (std::size_t a = 0; a < trace.size(); ++a)
      out << (t + 1) << ',' << trace.names[a] << ',' << num(trace.logit(t, a)) << ','
          << num(trace.likelihood(t, a)) << '\n';
}

inline void dump_trace(const ForwardTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write " + path.string());
  write_trace_csv(trace, out);
  if (!out) throw RuntimeError("failed writing " + path.string());
}

struct TraceRow {
  std::size_t step;
  std::string argument;
  double logit;
  double likelihood;
};

inline std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::vector<TraceRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != "step,argument,logit,likelihood") throw ParseError("bad trace header", lineno);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 4) throw ParseError("expected 4 columns", lineno);
    try {
      rows.push_back({std::stoul(f[0]), f[1], std::stod(f[2]), std::stod(f[3])});
    } catch (const std::exception&) {
      throw ParseError("bad number", lineno);
    }
  }
  return rows;
}

}  // namespace argnn
