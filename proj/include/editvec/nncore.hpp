#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "editvec/rng.hpp"

namespace editvec::nn {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IndexError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptySequence : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AllMasked : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Row-major dense array of 64-bit reals with an optional same-shape
// gradient accumulator.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;
  std::vector<double> g;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape_) : shape(std::move(shape_)) {
    v.assign(element_count(), 0.0);
  }

  std::size_t element_count() const {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  void ensure_grad() {
    if (g.size() != v.size()) g.assign(v.size(), 0.0);
  }
  void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }

  double& at(std::size_t r, std::size_t c) { return v[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols() + c]; }
};

struct NamedParam {
  std::string name;
  Tensor* tensor;
};
using ParamList = std::vector<NamedParam>;

// Per-model dropout rates. The three tanh rates and the baseline rate are
// the paper's; the LSTM-internal rate is a recorded default.
struct DropoutRates {
  double lstm_internal = 0.2;
  double pce_tanh = 0.2;
  double ce_tanh = 0.4;
  double classifier_tanh = 0.6;
  double baseline_lstm = 0.8;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  DropoutRates dropout;
  // When >= 0, training stops once a clean pass over the training set
  // reaches this accuracy. Disabled (-1) by default.
  double stop_at_train_accuracy = -1.0;

  void validate() const;
};

// --- kernels ----------------------------------------------------------------

// Reassociated dot product; fixed evaluation order keeps results
// reproducible while still vectorizing.
double dot(const double* a, const double* b, std::size_t n);

// y = W x, W row-major [out x in]
void matvec(const double* w, const double* x, double* y, std::size_t out, std::size_t in);
// dx += W^T dy
void matvec_t_acc(const double* w, const double* dy, double* dx, std::size_t out,
                  std::size_t in);
// dW += dy x^T
void outer_acc(const double* dy, const double* x, double* dw, std::size_t out,
               std::size_t in);

// --- primitive ops ----------------------------------------------------------

inline constexpr int kPadId = 0;

// Row gather. Row kPadId stays all-zero and receives no gradient.
Tensor embedding_lookup(const Tensor& table, std::span<const int> ids);
void embedding_backward(Tensor& table, std::span<const int> ids, const Tensor& d_out);

enum class Activation { Tanh, ReLU, Identity };

struct Dense {
  Tensor w;  // [out x in]
  Tensor b;  // [out]
  Activation act = Activation::Identity;

  void init(std::size_t in, std::size_t out, Activation a, Rng& rng);
  std::size_t in_dim() const { return w.cols(); }
  std::size_t out_dim() const { return w.rows(); }

  // y_post must hold out_dim doubles; y_post is the activated output and is
  // also the cache used by backward.
  void forward(const double* x, double* y_post) const;
  // dx may be null when the input gradient is not needed.
  void backward(const double* x, const double* y_post, const double* dy, double* dx);
};

// Functional form of the spec's dense op.
Tensor dense_apply(const Tensor& x, const Tensor& w, const Tensor& b, Activation act);

struct LstmCell {
  Tensor wx;  // [4H x D]
  Tensor wh;  // [4H x H]
  Tensor b;   // [4H], forget-gate slice initialized to 1
  std::size_t in_dim = 0;
  std::size_t hidden = 0;

  void init(std::size_t d, std::size_t h, Rng& rng);
};

// Caches for one sequence pass through an LstmCell. Gate order: i, f, g, o.
struct LstmRun {
  std::size_t steps = 0;
  std::size_t hidden = 0;
  std::vector<double> gates;   // T x 4H, post-nonlinearity
  std::vector<double> c;       // T x H
  std::vector<double> h;       // T x H, post-dropout when a mask is used
  std::vector<double> tanhc;   // T x H
  std::vector<double> dropout; // T x H scale factors (empty when unused)

  void resize(std::size_t t, std::size_t h_dim);
};

// xs: T x D inputs. Optional inverted-dropout scales (rate, rng) applied to
// each step's output, affecting both the recurrence and what the caller
// reads. Returns nothing; read run.h for outputs.
void lstm_forward(const LstmCell& cell, const double* xs, std::size_t t, LstmRun& run,
                  double dropout_rate = 0.0, Rng* rng = nullptr);

// d_h_steps: T x H upstream gradient on each step's (post-dropout) output;
// may be null when d_h_final covers only the last step. dxs (T x D) may be
// null. Parameter gradients accumulate into the cell tensors.
void lstm_backward(LstmCell& cell, const double* xs, std::size_t t, const LstmRun& run,
                   const double* d_h_steps, const double* d_h_final, double* dxs);

// Functional wrappers for the spec ops. mask[i] marks real steps; real
// steps must form a prefix.
Tensor lstm_encode(const LstmCell& cell, const Tensor& sequence,
                   const std::vector<bool>& mask);
// Concatenation of the final forward state and final backward state.
Tensor bilstm_encode(const LstmCell& fwd, const LstmCell& bwd, const Tensor& sequence,
                     const std::vector<bool>& mask);

// Attention scorer: dense(d -> hidden, ReLU) then dense(hidden -> 1).
struct AttnScorer {
  Dense hidden;
  Dense out;
  void init(std::size_t d, std::size_t hidden_dim, Rng& rng);
};

struct AttnResult {
  std::vector<double> pooled;   // d
  std::vector<double> weights;  // n, exactly 0 at masked slots
};

// Masked softmax attention over item rows. mask[i] true = real item.
AttnResult attention_pool(const Tensor& items, const std::vector<bool>& mask,
                          const AttnScorer& scorer);

struct SoftmaxResult {
  double loss = 0.0;
  std::vector<double> probs;
};

// Numerically stabilized categorical cross-entropy.
SoftmaxResult softmax_cross_entropy(std::span<const double> logits, int label);

// Inverted dropout: scales kept entries by 1/(1-rate) during training,
// identity at inference.
Tensor dropout_apply(const Tensor& x, double rate, Rng& rng, bool training);
// Fills scale factors (0 or 1/(1-rate)) for an in-place training pass.
void dropout_mask(double* scales, std::size_t n, double rate, Rng& rng);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long step = 0;
  void init(const ParamList& params);
};

// Standard Adam with bias correction, reading gradients from each
// parameter's grad accumulator.
void adam_step(const ParamList& params, AdamState& state, const TrainConfig& config);

// --- gradient checking ------------------------------------------------------

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t checked = 0;

  bool passed(double tolerance = 1e-4) const { return max_rel_err < tolerance; }
};

// Central finite differences (step h) against the analytic gradients the
// callbacks produce. loss() must be deterministic. compute_grads() must
// zero and then fill every parameter's grad. For large tensors a
// deterministic sample of max_checks_per_tensor elements is probed
// (0 = probe everything).
GradCheckReport grad_check(const ParamList& params, const std::function<double()>& loss,
                           const std::function<void()>& compute_grads, double h = 1e-5,
                           std::size_t max_checks_per_tensor = 0,
                           std::uint64_t pick_seed = 1234);

// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
void init_uniform_fanin(Tensor& t, std::size_t fan_in, Rng& rng);

}  // namespace editvec::nn
