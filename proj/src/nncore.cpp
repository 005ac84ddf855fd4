#include "editvec/nncore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace editvec::nn {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw ConfigError("adam betas must lie in [0,1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be > 0");
  for (double r : {dropout.lstm_internal, dropout.pce_tanh, dropout.ce_tanh,
                   dropout.classifier_tanh, dropout.baseline_lstm})
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("dropout rates must lie in [0,1)");
}

// --- kernels ----------------------------------------------------------------

double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
    s4 += a[i + 4] * b[i + 4];
    s5 += a[i + 5] * b[i + 5];
    s6 += a[i + 6] * b[i + 6];
    s7 += a[i + 7] * b[i + 7];
  }
  double s = ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void matvec(const double* w, const double* x, double* y, std::size_t out,
            std::size_t in) {
  for (std::size_t o = 0; o < out; ++o) y[o] = dot(w + o * in, x, in);
}

void matvec_t_acc(const double* w, const double* dy, double* dx, std::size_t out,
                  std::size_t in) {
  for (std::size_t o = 0; o < out; ++o) {
    const double s = dy[o];
    if (s == 0.0) continue;
    const double* row = w + o * in;
    for (std::size_t i = 0; i < in; ++i) dx[i] += row[i] * s;
  }
}

void outer_acc(const double* dy, const double* x, double* dw, std::size_t out,
               std::size_t in) {
  for (std::size_t o = 0; o < out; ++o) {
    const double s = dy[o];
    if (s == 0.0) continue;
    double* row = dw + o * in;
    for (std::size_t i = 0; i < in; ++i) row[i] += x[i] * s;
  }
}

void init_uniform_fanin(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& x : t.v) x = rng.uniform(-bound, bound);
  t.ensure_grad();
}

// --- embedding --------------------------------------------------------------

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids) {
  if (table.shape.size() != 2) throw ShapeError("embedding table must be 2-D");
  const std::size_t v = table.rows(), d = table.cols();
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    int id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= v)
      throw IndexError("embedding id " + std::to_string(id) + " out of range");
    std::memcpy(out.v.data() + i * d, table.v.data() + static_cast<std::size_t>(id) * d,
                d * sizeof(double));
  }
  return out;
}

void embedding_backward(Tensor& table, std::span<const int> ids, const Tensor& d_out) {
  const std::size_t d = table.cols();
  table.ensure_grad();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == kPadId) continue;  // PAD receives no gradient
    double* dst = table.g.data() + static_cast<std::size_t>(ids[i]) * d;
    const double* src = d_out.v.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
  }
}

// --- dense ------------------------------------------------------------------

namespace {
double activate(double x, Activation a) {
  switch (a) {
    case Activation::Tanh: return std::tanh(x);
    case Activation::ReLU: return x > 0.0 ? x : 0.0;
    case Activation::Identity: return x;
  }
  return x;
}
double activation_grad(double post, Activation a) {
  switch (a) {
    case Activation::Tanh: return 1.0 - post * post;
    case Activation::ReLU: return post > 0.0 ? 1.0 : 0.0;
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}
}  // namespace

void Dense::init(std::size_t in, std::size_t out, Activation a, Rng& rng) {
  w = Tensor({out, in});
  b = Tensor({out});
  act = a;
  init_uniform_fanin(w, in, rng);
  b.ensure_grad();
}

void Dense::forward(const double* x, double* y_post) const {
  const std::size_t out = out_dim(), in = in_dim();
  matvec(w.v.data(), x, y_post, out, in);
  for (std::size_t o = 0; o < out; ++o) y_post[o] = activate(y_post[o] + b.v[o], act);
}

void Dense::backward(const double* x, const double* y_post, const double* dy,
                     double* dx) {
  const std::size_t out = out_dim(), in = in_dim();
  thread_local std::vector<double> dpre;
  dpre.resize(out);
  for (std::size_t o = 0; o < out; ++o)
    dpre[o] = dy[o] * activation_grad(y_post[o], act);
  outer_acc(dpre.data(), x, w.g.data(), out, in);
  for (std::size_t o = 0; o < out; ++o) b.g[o] += dpre[o];
  if (dx) matvec_t_acc(w.v.data(), dpre.data(), dx, out, in);
}

Tensor dense_apply(const Tensor& x, const Tensor& w, const Tensor& b, Activation act) {
  if (w.shape.size() != 2) throw ShapeError("weight must be 2-D");
  const std::size_t out = w.rows(), in = w.cols();
  if (b.element_count() != out) throw ShapeError("bias length mismatch");
  const bool vector_input = x.shape.size() == 1;
  const std::size_t rows = vector_input ? 1 : x.rows();
  const std::size_t xin = vector_input ? x.element_count() : x.cols();
  if (xin != in) throw ShapeError("inner dimensions disagree");
  Tensor y(vector_input ? std::vector<std::size_t>{out}
                        : std::vector<std::size_t>{rows, out});
  for (std::size_t r = 0; r < rows; ++r) {
    double* yr = y.v.data() + r * out;
    matvec(w.v.data(), x.v.data() + r * in, yr, out, in);
    for (std::size_t o = 0; o < out; ++o) yr[o] = activate(yr[o] + b.v[o], act);
  }
  return y;
}

// --- lstm -------------------------------------------------------------------

void LstmCell::init(std::size_t d, std::size_t h, Rng& rng) {
  in_dim = d;
  hidden = h;
  wx = Tensor({4 * h, d});
  wh = Tensor({4 * h, h});
  b = Tensor({4 * h});
  init_uniform_fanin(wx, d, rng);
  init_uniform_fanin(wh, h, rng);
  b.ensure_grad();
  for (std::size_t i = h; i < 2 * h; ++i) b.v[i] = 1.0;  // forget-gate bias
}

void LstmRun::resize(std::size_t t, std::size_t h_dim) {
  steps = t;
  hidden = h_dim;
  gates.assign(t * 4 * h_dim, 0.0);
  c.assign(t * h_dim, 0.0);
  h.assign(t * h_dim, 0.0);
  tanhc.assign(t * h_dim, 0.0);
  dropout.clear();
}

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

void lstm_forward(const LstmCell& cell, const double* xs, std::size_t t, LstmRun& run,
                  double dropout_rate, Rng* rng) {
  const std::size_t h = cell.hidden, d = cell.in_dim;
  run.resize(t, h);
  const bool dropping = dropout_rate > 0.0 && rng != nullptr;
  if (dropping) {
    run.dropout.resize(t * h);
    dropout_mask(run.dropout.data(), t * h, dropout_rate, *rng);
  }
  std::vector<double> z(4 * h), zr(4 * h);
  for (std::size_t step = 0; step < t; ++step) {
    const double* x = xs + step * d;
    const double* h_prev = step > 0 ? run.h.data() + (step - 1) * h : nullptr;
    matvec(cell.wx.v.data(), x, z.data(), 4 * h, d);
    if (h_prev) {
      matvec(cell.wh.v.data(), h_prev, zr.data(), 4 * h, h);
      for (std::size_t i = 0; i < 4 * h; ++i) z[i] += zr[i];
    }
    for (std::size_t i = 0; i < 4 * h; ++i) z[i] += cell.b.v[i];

    double* gates = run.gates.data() + step * 4 * h;
    double* c = run.c.data() + step * h;
    double* hc = run.tanhc.data() + step * h;
    double* hv = run.h.data() + step * h;
    const double* c_prev = step > 0 ? run.c.data() + (step - 1) * h : nullptr;
    for (std::size_t i = 0; i < h; ++i) {
      double gi = sigmoid(z[i]);
      double gf = sigmoid(z[h + i]);
      double gg = std::tanh(z[2 * h + i]);
      double go = sigmoid(z[3 * h + i]);
      gates[i] = gi;
      gates[h + i] = gf;
      gates[2 * h + i] = gg;
      gates[3 * h + i] = go;
      c[i] = gf * (c_prev ? c_prev[i] : 0.0) + gi * gg;
      hc[i] = std::tanh(c[i]);
      hv[i] = go * hc[i];
      if (dropping) hv[i] *= run.dropout[step * h + i];
    }
  }
}

void lstm_backward(LstmCell& cell, const double* xs, std::size_t t, const LstmRun& run,
                   const double* d_h_steps, const double* d_h_final, double* dxs) {
  const std::size_t h = cell.hidden, d = cell.in_dim;
  cell.wx.ensure_grad();
  cell.wh.ensure_grad();
  cell.b.ensure_grad();
  const bool dropped = !run.dropout.empty();

  std::vector<double> dh(h, 0.0), dc(h, 0.0), dz(4 * h);
  for (std::size_t step = t; step-- > 0;) {
    const double* gates = run.gates.data() + step * 4 * h;
    const double* c = run.c.data() + step * h;
    const double* hc = run.tanhc.data() + step * h;
    const double* c_prev = step > 0 ? run.c.data() + (step - 1) * h : nullptr;
    (void)c;

    for (std::size_t i = 0; i < h; ++i) {
      double incoming = dh[i];
      if (d_h_steps) incoming += d_h_steps[step * h + i];
      if (d_h_final && step == t - 1) incoming += d_h_final[i];
      if (dropped) incoming *= run.dropout[step * h + i];

      const double gi = gates[i], gf = gates[h + i], gg = gates[2 * h + i],
                   go = gates[3 * h + i];
      const double d_o = incoming * hc[i];
      dc[i] += incoming * go * (1.0 - hc[i] * hc[i]);
      const double d_i = dc[i] * gg;
      const double d_g = dc[i] * gi;
      const double d_f = dc[i] * (c_prev ? c_prev[i] : 0.0);
      const double dc_prev = dc[i] * gf;

      dz[i] = d_i * gi * (1.0 - gi);
      dz[h + i] = d_f * gf * (1.0 - gf);
      dz[2 * h + i] = d_g * (1.0 - gg * gg);
      dz[3 * h + i] = d_o * go * (1.0 - go);
      dc[i] = dc_prev;
    }

    const double* x = xs + step * d;
    outer_acc(dz.data(), x, cell.wx.g.data(), 4 * h, d);
    if (step > 0) {
      const double* h_prev = run.h.data() + (step - 1) * h;
      outer_acc(dz.data(), h_prev, cell.wh.g.data(), 4 * h, h);
    }
    for (std::size_t i = 0; i < 4 * h; ++i) cell.b.g[i] += dz[i];
    if (dxs) matvec_t_acc(cell.wx.v.data(), dz.data(), dxs + step * d, 4 * h, d);

    std::fill(dh.begin(), dh.end(), 0.0);
    if (step > 0) matvec_t_acc(cell.wh.v.data(), dz.data(), dh.data(), 4 * h, h);
  }
}

namespace {
std::size_t masked_prefix_length(const std::vector<bool>& mask) {
  std::size_t t = 0;
  while (t < mask.size() && mask[t]) ++t;
  for (std::size_t i = t; i < mask.size(); ++i)
    if (mask[i]) throw ShapeError("mask must be a true-prefix");
  return t;
}
}  // namespace

Tensor lstm_encode(const LstmCell& cell, const Tensor& sequence,
                   const std::vector<bool>& mask) {
  if (sequence.shape.size() != 2 || sequence.cols() != cell.in_dim)
    throw ShapeError("sequence must be T x in_dim");
  std::size_t t = masked_prefix_length(mask);
  if (t == 0) throw EmptySequence("no unmasked steps");
  LstmRun run;
  lstm_forward(cell, sequence.v.data(), t, run);
  Tensor out({cell.hidden});
  std::copy_n(run.h.data() + (t - 1) * cell.hidden, cell.hidden, out.v.begin());
  return out;
}

Tensor bilstm_encode(const LstmCell& fwd, const LstmCell& bwd, const Tensor& sequence,
                     const std::vector<bool>& mask) {
  if (fwd.hidden != bwd.hidden || fwd.in_dim != bwd.in_dim)
    throw ShapeError("direction cells disagree");
  if (sequence.shape.size() != 2 || sequence.cols() != fwd.in_dim)
    throw ShapeError("sequence must be T x in_dim");
  std::size_t t = masked_prefix_length(mask);
  if (t == 0) throw EmptySequence("no unmasked steps");
  const std::size_t d = fwd.in_dim, h = fwd.hidden;

  LstmRun run_f;
  lstm_forward(fwd, sequence.v.data(), t, run_f);

  std::vector<double> reversed(t * d);
  for (std::size_t s = 0; s < t; ++s)
    std::copy_n(sequence.v.data() + (t - 1 - s) * d, d, reversed.data() + s * d);
  LstmRun run_b;
  lstm_forward(bwd, reversed.data(), t, run_b);

  Tensor out({2 * h});
  std::copy_n(run_f.h.data() + (t - 1) * h, h, out.v.begin());
  std::copy_n(run_b.h.data() + (t - 1) * h, h, out.v.begin() + h);
  return out;
}

// --- attention --------------------------------------------------------------

void AttnScorer::init(std::size_t d, std::size_t hidden_dim, Rng& rng) {
  hidden.init(d, hidden_dim, Activation::ReLU, rng);
  out.init(hidden_dim, 1, Activation::Identity, rng);
}

AttnResult attention_pool(const Tensor& items, const std::vector<bool>& mask,
                          const AttnScorer& scorer) {
  if (items.shape.size() != 2) throw ShapeError("items must be N x d");
  const std::size_t n = items.rows(), d = items.cols();
  if (mask.size() != n) throw ShapeError("mask length mismatch");

  std::vector<double> scores(n, 0.0);
  std::vector<double> hidden(scorer.hidden.out_dim());
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    any = true;
    scorer.hidden.forward(items.v.data() + i * d, hidden.data());
    double s;
    scorer.out.forward(hidden.data(), &s);
    scores[i] = s;
  }
  if (!any) throw AllMasked("attention over fully masked items");

  double max_s = -1e300;
  for (std::size_t i = 0; i < n; ++i)
    if (mask[i]) max_s = std::max(max_s, scores[i]);
  double z = 0.0;
  AttnResult res;
  res.weights.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    res.weights[i] = std::exp(scores[i] - max_s);
    z += res.weights[i];
  }
  for (std::size_t i = 0; i < n; ++i) res.weights[i] /= z;

  res.pooled.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (res.weights[i] == 0.0) continue;
    const double* row = items.v.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) res.pooled[j] += res.weights[i] * row[j];
  }
  return res;
}

// --- softmax cross entropy ---------------------------------------------------

SoftmaxResult softmax_cross_entropy(std::span<const double> logits, int label) {
  const std::size_t k = logits.size();
  if (k < 2) throw ShapeError("need at least two classes");
  if (label < 0 || static_cast<std::size_t>(label) >= k)
    throw IndexError("label out of range");
  double max_l = logits[0];
  for (double l : logits) max_l = std::max(max_l, l);
  SoftmaxResult res;
  res.probs.resize(k);
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    res.probs[i] = std::exp(logits[i] - max_l);
    z += res.probs[i];
  }
  for (double& p : res.probs) p /= z;
  res.loss = -std::log(res.probs[static_cast<std::size_t>(label)]);
  return res;
}

// --- dropout ----------------------------------------------------------------

void dropout_mask(double* scales, std::size_t n, double rate, Rng& rng) {
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < n; ++i)
    scales[i] = rng.uniform() < rate ? 0.0 : keep_scale;
}

Tensor dropout_apply(const Tensor& x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0,1)");
  Tensor out = x;
  if (!training || rate == 0.0) return out;
  for (double& v : out.v) v *= (rng.uniform() < rate ? 0.0 : 1.0 / (1.0 - rate));
  return out;
}

// --- adam -------------------------------------------------------------------

void AdamState::init(const ParamList& params) {
  m.clear();
  v.clear();
  step = 0;
  for (const auto& p : params) {
    m.emplace_back(p.tensor->v.size(), 0.0);
    v.emplace_back(p.tensor->v.size(), 0.0);
  }
}

void adam_step(const ParamList& params, AdamState& state, const TrainConfig& config) {
  if (state.m.size() != params.size()) throw ShapeError("Adam state mismatch");
  ++state.step;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p].tensor;
    if (t.g.size() != t.v.size()) throw ShapeError("missing gradient for " + params[p].name);
    double* m = state.m[p].data();
    double* v = state.v[p].data();
    for (std::size_t i = 0; i < t.v.size(); ++i) {
      const double g = t.g[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      t.v[i] -= config.learning_rate * mh / (std::sqrt(vh) + config.adam_epsilon);
    }
  }
}

// --- gradient checking --------------------------------------------------------

GradCheckReport grad_check(const ParamList& params, const std::function<double()>& loss,
                           const std::function<void()>& compute_grads, double h,
                           std::size_t max_checks_per_tensor, std::uint64_t pick_seed) {
  compute_grads();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.tensor->g);

  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p].tensor;
    const std::size_t n = t.v.size();
    std::vector<std::size_t> picks;
    if (max_checks_per_tensor == 0 || n <= max_checks_per_tensor) {
      picks.resize(n);
      for (std::size_t i = 0; i < n; ++i) picks[i] = i;
    } else {
      Rng rng(pick_seed + p);
      std::vector<std::size_t> all(n);
      for (std::size_t i = 0; i < n; ++i) all[i] = i;
      rng.shuffle(all);
      picks.assign(all.begin(), all.begin() + static_cast<long>(max_checks_per_tensor));
      std::sort(picks.begin(), picks.end());
    }
    for (std::size_t i : picks) {
      const double orig = t.v[i];
      t.v[i] = orig + h;
      const double lp = loss();
      t.v[i] = orig - h;
      const double lm = loss();
      t.v[i] = orig;
      const double numeric = (lp - lm) / (2.0 * h);
      const double ana = analytic[p][i];
      const double denom = std::max({std::fabs(numeric), std::fabs(ana), 1e-3});
      const double rel = std::fabs(numeric - ana) / denom;
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = params[p].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace editvec::nn
