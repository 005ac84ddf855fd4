#include "editvec/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "editvec/checkpoint.hpp"
#include "editvec/config_io.hpp"
#include "editvec/minilang.hpp"

namespace editvec::models {

using nlohmann::json;
using nn::Tensor;

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

EncodedEdit encode_for_models(const data::CodeEdit& edit,
                              const pathctx::Vocabulary& vocab,
                              const std::map<std::string, int>& class_index,
                              int max_contexts, int max_seq_len) {
  EncodedEdit out;
  auto enc = pathctx::encode_edit(minilang::parse_source(edit.old_source),
                                  minilang::parse_source(edit.new_source), max_contexts);
  auto encode_side = [&](const std::vector<pathctx::PathContext>& side,
                         std::vector<EncodedContext>& dst) {
    dst.reserve(side.size());
    for (const auto& ctx : side) {
      EncodedContext ec;
      for (const auto& s : ctx.left_subtokens) ec.left.push_back(vocab.subtoken_id(s));
      for (const auto& s : ctx.path_labels) ec.path.push_back(vocab.pathlabel_id(s));
      for (const auto& s : ctx.right_subtokens) ec.right.push_back(vocab.subtoken_id(s));
      dst.push_back(std::move(ec));
    }
  };
  encode_side(enc.old_contexts, out.old_contexts);
  encode_side(enc.new_contexts, out.new_contexts);

  auto encode_tokens = [&](const std::string& src, std::vector<int>& dst) {
    auto texts = data::token_texts(src);
    std::size_t n = std::min<std::size_t>(texts.size(), static_cast<std::size_t>(max_seq_len));
    for (std::size_t i = 0; i < n; ++i) dst.push_back(vocab.token_id(texts[i]));
  };
  encode_tokens(edit.old_source, out.old_tokens);
  encode_tokens(edit.new_source, out.new_tokens);

  auto it = class_index.find(edit.label);
  out.label = it == class_index.end() ? -1 : it->second;
  return out;
}

std::vector<std::vector<std::string>> token_corpus_of(const data::Dataset& dataset) {
  std::vector<std::vector<std::string>> out;
  out.reserve(dataset.edits.size() * 2);
  for (const auto& e : dataset.edits) {
    out.push_back(data::token_texts(e.old_source));
    out.push_back(data::token_texts(e.new_source));
  }
  return out;
}

namespace {

void init_embedding(Tensor& table, std::size_t vocab, std::size_t dim, Rng& rng) {
  table = Tensor({vocab, dim});
  nn::init_uniform_fanin(table, dim, rng);
  for (std::size_t j = 0; j < dim; ++j) table.v[nn::kPadId * dim + j] = 0.0;
}

void softmax_inplace(std::vector<double>& v) {
  double m = *std::max_element(v.begin(), v.end());
  double z = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    z += x;
  }
  for (double& x : v) x /= z;
}

void fill_scales(std::vector<double>& scales, std::size_t n, double rate, bool training,
                 Rng* rng) {
  scales.assign(n, 1.0);
  if (training && rate > 0.0 && rng) nn::dropout_mask(scales.data(), n, rate, *rng);
}

// Mean of embedding rows; ids is never empty (sub-token splitting never
// returns an empty list).
void mean_rows(const Tensor& table, std::span<const int> ids, std::vector<double>& out) {
  const std::size_t d = table.cols();
  out.assign(d, 0.0);
  for (int id : ids) {
    const double* row = table.v.data() + static_cast<std::size_t>(id) * d;
    for (std::size_t j = 0; j < d; ++j) out[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (double& x : out) x *= inv;
}

void mean_rows_backward(Tensor& table, std::span<const int> ids,
                        std::span<const double> d_mean) {
  const std::size_t d = table.cols();
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (int id : ids) {
    if (id == nn::kPadId) continue;
    double* g = table.g.data() + static_cast<std::size_t>(id) * d;
    for (std::size_t j = 0; j < d; ++j) g[j] += d_mean[j] * inv;
  }
}

// Shared epoch/batch/Adam loop for both neural models.
template <typename Model>
void run_training(Model& model, std::span<const EncodedEdit> samples,
                  const nn::TrainConfig& config, TrainHistory* history) {
  config.validate();
  if (samples.empty()) throw nn::ConfigError("empty training set");
  for (const auto& s : samples)
    if (s.label < 0 || s.label >= model.num_classes())
      throw nn::ConfigError("sample label out of range");

  nn::ParamList params = model.params();
  nn::AdamState adam;
  adam.init(params);
  Rng shuffle_rng(config.seed ^ 0x5bf0f1b7c8aa3d19ULL);
  Rng dropout_rng(config.seed ^ 0x94d049bb133111ebULL);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);

  TrainHistory hist;
  const std::size_t n = samples.size();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      for (auto& p : params) {
        p.tensor->ensure_grad();
        p.tensor->zero_grad();
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i)
        epoch_loss +=
            model.forward_backward(samples[order[i]], scale, true, &dropout_rng);
      nn::adam_step(params, adam, config);
    }
    hist.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
    hist.epochs_run = epoch + 1;
    if (config.stop_at_train_accuracy >= 0.0 &&
        model.accuracy(samples) >= config.stop_at_train_accuracy)
      break;
  }
  hist.final_train_accuracy = model.accuracy(samples);
  if (history) *history = hist;
}

}  // namespace

// ---------------------------------------------------------------------------
// edit2vec
// ---------------------------------------------------------------------------

namespace {
constexpr std::size_t kS = Dims::kSubtokenEmb;       // 32
constexpr std::size_t kP = Dims::kPathEmb;           // 128
constexpr std::size_t kH = Dims::kBilstmPerDir;      // 80
constexpr std::size_t kPathVec = 2 * kH;             // 160
constexpr std::size_t kConcat = kS + kPathVec + kS;  // 224
constexpr std::size_t kC = Dims::kCpcv;              // 128
constexpr std::size_t kA = Dims::kAttnHidden;        // 128
constexpr std::size_t kR = Dims::kEditVecR;          // 160
constexpr std::size_t kCH = Dims::kClassifierHidden; // 80

static_assert(kC == 128 && kR == 160 && kCH == 80 && kS == 32 && kP == 128);
static_assert(kPathVec == 160, "bi-LSTM halves must concatenate to 160");
}  // namespace

struct Edit2Vec::Work {
  struct Ctx {
    std::vector<double> left_mean, right_mean;
    std::vector<double> xs, xs_rev;
    nn::LstmRun run_f, run_b;
    std::vector<double> concat;
    std::vector<double> pce_post;
    std::vector<double> pce_scale;
    std::vector<double> cpcv;
    std::vector<double> attn_hidden;
    double score = 0.0;
  };
  struct Side {
    std::vector<Ctx> ctx;
    std::size_t n = 0;
    std::vector<double> weights;
    std::vector<double> pooled;
    std::vector<double> ce_post;
    std::vector<double> ce_scale;
    std::vector<double> r;
  };
  Side sides[2];
  std::vector<double> concat;
  std::vector<double> hid_post;
  std::vector<double> hid_scale;
  std::vector<double> hid_dropped;
  std::vector<double> logits;
  std::vector<double> probs;
  int label = -1;
  // backward scratch
  std::vector<double> d_xs, d_xs_rev, d_concat224, d_cpcv, d_attn_hidden, d_pce_post,
      d_pooled, d_ce_post, d_r, d_concat, d_hid_post, d_hid_dropped, d_logits;
};

Edit2Vec::Edit2Vec(std::size_t subtoken_vocab, std::size_t pathlabel_vocab,
                   int num_classes, const nn::TrainConfig& config)
    : num_classes_(num_classes), config_(config), work_(std::make_unique<Work>()) {
  config_.validate();
  if (num_classes < 2) throw nn::ConfigError("need at least two classes");
  Rng rng(config.seed ^ 0x2545f4914f6cdd1dULL);
  init_embedding(sub_emb_, subtoken_vocab, kS, rng);
  init_embedding(path_emb_, pathlabel_vocab, kP, rng);
  lstm_fwd_.init(kP, kH, rng);
  lstm_bwd_.init(kP, kH, rng);
  pce_.init(kConcat, kC, nn::Activation::Tanh, rng);
  attn_.init(kC, kA, rng);
  ce_.init(kC, kR, nn::Activation::Tanh, rng);
  cls_hidden_.init(2 * kR, kCH, nn::Activation::Tanh, rng);
  cls_out_.init(kCH, static_cast<std::size_t>(num_classes), nn::Activation::Identity, rng);
}

Edit2Vec::Edit2Vec(Edit2Vec&&) noexcept = default;
Edit2Vec& Edit2Vec::operator=(Edit2Vec&&) noexcept = default;
Edit2Vec::~Edit2Vec() = default;

nn::ParamList Edit2Vec::params() {
  return {
      {"sub_emb", &sub_emb_},          {"path_emb", &path_emb_},
      {"lstm_fwd.wx", &lstm_fwd_.wx},  {"lstm_fwd.wh", &lstm_fwd_.wh},
      {"lstm_fwd.b", &lstm_fwd_.b},    {"lstm_bwd.wx", &lstm_bwd_.wx},
      {"lstm_bwd.wh", &lstm_bwd_.wh},  {"lstm_bwd.b", &lstm_bwd_.b},
      {"pce.w", &pce_.w},              {"pce.b", &pce_.b},
      {"attn.hidden.w", &attn_.hidden.w}, {"attn.hidden.b", &attn_.hidden.b},
      {"attn.out.w", &attn_.out.w},    {"attn.out.b", &attn_.out.b},
      {"ce.w", &ce_.w},                {"ce.b", &ce_.b},
      {"cls_hidden.w", &cls_hidden_.w}, {"cls_hidden.b", &cls_hidden_.b},
      {"cls_out.w", &cls_out_.w},      {"cls_out.b", &cls_out_.b},
  };
}

std::size_t Edit2Vec::param_count() const {
  std::size_t n = 0;
  for (const auto& p : const_cast<Edit2Vec*>(this)->params()) n += p.tensor->v.size();
  return n;
}

double Edit2Vec::forward(const EncodedEdit& edit, bool training, Rng* rng,
                         Work& work) const {
  const double lstm_rate = training ? config_.dropout.lstm_internal : 0.0;
  for (int s = 0; s < 2; ++s) {
    const auto& ctxs = s == 0 ? edit.old_contexts : edit.new_contexts;
    Work::Side& side = work.sides[s];
    side.n = ctxs.size();
    if (side.n == 0) throw nn::AllMasked("edit side has no path-contexts");
    if (side.ctx.size() < side.n) side.ctx.resize(side.n);

    for (std::size_t i = 0; i < side.n; ++i) {
      const EncodedContext& ec = ctxs[i];
      Work::Ctx& c = side.ctx[i];
      mean_rows(sub_emb_, ec.left, c.left_mean);
      mean_rows(sub_emb_, ec.right, c.right_mean);

      const std::size_t t = ec.path.size();
      c.xs.resize(t * kP);
      for (std::size_t step = 0; step < t; ++step)
        std::memcpy(c.xs.data() + step * kP,
                    path_emb_.v.data() + static_cast<std::size_t>(ec.path[step]) * kP,
                    kP * sizeof(double));
      c.xs_rev.resize(t * kP);
      for (std::size_t step = 0; step < t; ++step)
        std::memcpy(c.xs_rev.data() + step * kP, c.xs.data() + (t - 1 - step) * kP,
                    kP * sizeof(double));

      nn::lstm_forward(lstm_fwd_, c.xs.data(), t, c.run_f, lstm_rate, rng);
      nn::lstm_forward(lstm_bwd_, c.xs_rev.data(), t, c.run_b, lstm_rate, rng);

      c.concat.resize(kConcat);
      std::memcpy(c.concat.data(), c.left_mean.data(), kS * sizeof(double));
      std::memcpy(c.concat.data() + kS, c.run_f.h.data() + (t - 1) * kH,
                  kH * sizeof(double));
      std::memcpy(c.concat.data() + kS + kH, c.run_b.h.data() + (t - 1) * kH,
                  kH * sizeof(double));
      std::memcpy(c.concat.data() + kS + kPathVec, c.right_mean.data(),
                  kS * sizeof(double));

      c.pce_post.resize(kC);
      pce_.forward(c.concat.data(), c.pce_post.data());
      fill_scales(c.pce_scale, kC, config_.dropout.pce_tanh, training, rng);
      c.cpcv.resize(kC);
      for (std::size_t j = 0; j < kC; ++j) c.cpcv[j] = c.pce_post[j] * c.pce_scale[j];

      c.attn_hidden.resize(kA);
      attn_.hidden.forward(c.cpcv.data(), c.attn_hidden.data());
      attn_.out.forward(c.attn_hidden.data(), &c.score);
    }

    side.weights.assign(side.n, 0.0);
    double max_s = side.ctx[0].score;
    for (std::size_t i = 1; i < side.n; ++i) max_s = std::max(max_s, side.ctx[i].score);
    double z = 0.0;
    for (std::size_t i = 0; i < side.n; ++i) {
      side.weights[i] = std::exp(side.ctx[i].score - max_s);
      z += side.weights[i];
    }
    for (double& w : side.weights) w /= z;

    side.pooled.assign(kC, 0.0);
    for (std::size_t i = 0; i < side.n; ++i) {
      const double w = side.weights[i];
      const double* cp = side.ctx[i].cpcv.data();
      for (std::size_t j = 0; j < kC; ++j) side.pooled[j] += w * cp[j];
    }

    side.ce_post.resize(kR);
    ce_.forward(side.pooled.data(), side.ce_post.data());
    fill_scales(side.ce_scale, kR, config_.dropout.ce_tanh, training, rng);
    side.r.resize(kR);
    for (std::size_t j = 0; j < kR; ++j) side.r[j] = side.ce_post[j] * side.ce_scale[j];
  }

  work.concat.resize(2 * kR);
  std::memcpy(work.concat.data(), work.sides[0].r.data(), kR * sizeof(double));
  std::memcpy(work.concat.data() + kR, work.sides[1].r.data(), kR * sizeof(double));

  work.hid_post.resize(kCH);
  cls_hidden_.forward(work.concat.data(), work.hid_post.data());
  fill_scales(work.hid_scale, kCH, config_.dropout.classifier_tanh, training, rng);
  work.hid_dropped.resize(kCH);
  for (std::size_t j = 0; j < kCH; ++j)
    work.hid_dropped[j] = work.hid_post[j] * work.hid_scale[j];

  work.logits.resize(static_cast<std::size_t>(num_classes_));
  cls_out_.forward(work.hid_dropped.data(), work.logits.data());
  auto sm = nn::softmax_cross_entropy(work.logits, edit.label < 0 ? 0 : edit.label);
  work.probs = std::move(sm.probs);
  work.label = edit.label;
  return edit.label < 0 ? 0.0 : sm.loss;
}

void Edit2Vec::backward(const EncodedEdit& edit, double loss_scale, Work& work) {
  const std::size_t k = static_cast<std::size_t>(num_classes_);
  work.d_logits.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j)
    work.d_logits[j] =
        (work.probs[j] - (static_cast<int>(j) == work.label ? 1.0 : 0.0)) * loss_scale;

  work.d_hid_dropped.assign(kCH, 0.0);
  cls_out_.backward(work.hid_dropped.data(), work.logits.data(), work.d_logits.data(),
                    work.d_hid_dropped.data());

  work.d_hid_post.assign(kCH, 0.0);
  for (std::size_t j = 0; j < kCH; ++j)
    work.d_hid_post[j] = work.d_hid_dropped[j] * work.hid_scale[j];

  work.d_concat.assign(2 * kR, 0.0);
  cls_hidden_.backward(work.concat.data(), work.hid_post.data(), work.d_hid_post.data(),
                       work.d_concat.data());

  for (int s = 0; s < 2; ++s) {
    Work::Side& side = work.sides[s];
    const auto& ctxs = s == 0 ? edit.old_contexts : edit.new_contexts;

    work.d_r.assign(kR, 0.0);
    std::memcpy(work.d_r.data(), work.d_concat.data() + static_cast<std::size_t>(s) * kR,
                kR * sizeof(double));

    work.d_ce_post.assign(kR, 0.0);
    for (std::size_t j = 0; j < kR; ++j)
      work.d_ce_post[j] = work.d_r[j] * side.ce_scale[j];

    work.d_pooled.assign(kC, 0.0);
    ce_.backward(side.pooled.data(), side.ce_post.data(), work.d_ce_post.data(),
                 work.d_pooled.data());

    // attention: pooled = sum_i w_i cpcv_i with w = softmax(scores)
    std::vector<double> dw(side.n);
    double wsum = 0.0;
    for (std::size_t i = 0; i < side.n; ++i) {
      dw[i] = nn::dot(work.d_pooled.data(), side.ctx[i].cpcv.data(), kC);
      wsum += side.weights[i] * dw[i];
    }

    for (std::size_t i = 0; i < side.n; ++i) {
      Work::Ctx& c = side.ctx[i];
      const double w = side.weights[i];
      const double ds = w * (dw[i] - wsum);

      work.d_cpcv.assign(kC, 0.0);
      for (std::size_t j = 0; j < kC; ++j) work.d_cpcv[j] = w * work.d_pooled[j];

      work.d_attn_hidden.assign(kA, 0.0);
      attn_.out.backward(c.attn_hidden.data(), &c.score, &ds, work.d_attn_hidden.data());
      attn_.hidden.backward(c.cpcv.data(), c.attn_hidden.data(),
                            work.d_attn_hidden.data(), work.d_cpcv.data());

      work.d_pce_post.assign(kC, 0.0);
      for (std::size_t j = 0; j < kC; ++j)
        work.d_pce_post[j] = work.d_cpcv[j] * c.pce_scale[j];

      work.d_concat224.assign(kConcat, 0.0);
      pce_.backward(c.concat.data(), c.pce_post.data(), work.d_pce_post.data(),
                    work.d_concat224.data());

      const EncodedContext& ec = ctxs[i];
      mean_rows_backward(sub_emb_, ec.left,
                         std::span<const double>(work.d_concat224.data(), kS));
      mean_rows_backward(
          sub_emb_, ec.right,
          std::span<const double>(work.d_concat224.data() + kS + kPathVec, kS));

      const std::size_t t = ec.path.size();
      work.d_xs.assign(t * kP, 0.0);
      work.d_xs_rev.assign(t * kP, 0.0);
      nn::lstm_backward(lstm_fwd_, c.xs.data(), t, c.run_f, nullptr,
                        work.d_concat224.data() + kS, work.d_xs.data());
      nn::lstm_backward(lstm_bwd_, c.xs_rev.data(), t, c.run_b, nullptr,
                        work.d_concat224.data() + kS + kH, work.d_xs_rev.data());
      for (std::size_t step = 0; step < t; ++step) {
        const double* rev = work.d_xs_rev.data() + (t - 1 - step) * kP;
        double* dst = work.d_xs.data() + step * kP;
        for (std::size_t j = 0; j < kP; ++j) dst[j] += rev[j];
      }
      for (std::size_t step = 0; step < t; ++step) {
        const int id = ec.path[step];
        if (id == nn::kPadId) continue;
        double* g = path_emb_.g.data() + static_cast<std::size_t>(id) * kP;
        const double* src = work.d_xs.data() + step * kP;
        for (std::size_t j = 0; j < kP; ++j) g[j] += src[j];
      }
    }
  }
}

double Edit2Vec::forward_backward(const EncodedEdit& edit, double loss_scale,
                                  bool training, Rng* dropout_rng) {
  double loss = forward(edit, training, training ? dropout_rng : nullptr, *work_);
  backward(edit, loss_scale, *work_);
  return loss;
}

std::vector<double> Edit2Vec::pce_forward(const EncodedContext& ctx) const {
  std::vector<double> left, right;
  mean_rows(sub_emb_, ctx.left, left);
  mean_rows(sub_emb_, ctx.right, right);

  Tensor seq({ctx.path.size(), kP});
  for (std::size_t step = 0; step < ctx.path.size(); ++step)
    std::memcpy(seq.v.data() + step * kP,
                path_emb_.v.data() + static_cast<std::size_t>(ctx.path[step]) * kP,
                kP * sizeof(double));
  std::vector<bool> mask(ctx.path.size(), true);
  Tensor path_vec = nn::bilstm_encode(lstm_fwd_, lstm_bwd_, seq, mask);

  std::vector<double> concat(kConcat);
  std::memcpy(concat.data(), left.data(), kS * sizeof(double));
  std::memcpy(concat.data() + kS, path_vec.v.data(), kPathVec * sizeof(double));
  std::memcpy(concat.data() + kS + kPathVec, right.data(), kS * sizeof(double));

  std::vector<double> cpcv(kC);
  pce_.forward(concat.data(), cpcv.data());
  return cpcv;
}

std::vector<double> Edit2Vec::code_encoder_forward(
    const std::vector<std::vector<double>>& cpcvs, const std::vector<bool>& mask) const {
  Tensor items({cpcvs.size(), kC});
  for (std::size_t i = 0; i < cpcvs.size(); ++i) {
    if (cpcvs[i].size() != kC) throw nn::ShapeError("CPCV must be 128-D");
    std::memcpy(items.v.data() + i * kC, cpcvs[i].data(), kC * sizeof(double));
  }
  auto pooled = nn::attention_pool(items, mask, attn_);
  std::vector<double> r(kR);
  ce_.forward(pooled.pooled.data(), r.data());
  return r;
}

std::vector<double> Edit2Vec::prelogits(std::span<const double> r_old,
                                        std::span<const double> r_new) const {
  if (r_old.size() != kR || r_new.size() != kR)
    throw nn::ShapeError("edit2vec side representations must be 160-D");
  std::vector<double> concat(2 * kR);
  std::copy(r_old.begin(), r_old.end(), concat.begin());
  std::copy(r_new.begin(), r_new.end(), concat.begin() + kR);
  std::vector<double> hid(kCH);
  cls_hidden_.forward(concat.data(), hid.data());
  return hid;
}

std::vector<double> Edit2Vec::classify(std::span<const double> r_old,
                                       std::span<const double> r_new) const {
  std::vector<double> hid = prelogits(r_old, r_new);
  std::vector<double> logits(static_cast<std::size_t>(num_classes_));
  cls_out_.forward(hid.data(), logits.data());
  softmax_inplace(logits);
  return logits;
}

std::vector<double> Edit2Vec::side_representation(
    const std::vector<EncodedContext>& ctxs) const {
  if (ctxs.empty()) throw nn::AllMasked("edit side has no path-contexts");
  std::vector<std::vector<double>> cpcvs;
  cpcvs.reserve(ctxs.size());
  for (const auto& c : ctxs) cpcvs.push_back(pce_forward(c));
  return code_encoder_forward(cpcvs, std::vector<bool>(ctxs.size(), true));
}

std::vector<double> Edit2Vec::predict_proba(const EncodedEdit& edit) const {
  auto r_old = side_representation(edit.old_contexts);
  auto r_new = side_representation(edit.new_contexts);
  return classify(r_old, r_new);
}

std::vector<double> Edit2Vec::prelogits_of(const EncodedEdit& edit) const {
  auto r_old = side_representation(edit.old_contexts);
  auto r_new = side_representation(edit.new_contexts);
  return prelogits(r_old, r_new);
}

int Edit2Vec::predict(const EncodedEdit& edit) const {
  auto p = predict_proba(edit);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

double Edit2Vec::accuracy(std::span<const EncodedEdit> samples) const {
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : samples)
    if (predict(s) == s.label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

Edit2Vec Edit2Vec::train(std::span<const EncodedEdit> samples, std::size_t subtoken_vocab,
                         std::size_t pathlabel_vocab, int num_classes,
                         const nn::TrainConfig& config, TrainHistory* history) {
  Edit2Vec model(subtoken_vocab, pathlabel_vocab, num_classes, config);
  run_training(model, samples, config, history);
  return model;
}

// ---------------------------------------------------------------------------
// LSTM baseline
// ---------------------------------------------------------------------------

namespace {
constexpr std::size_t kTok = Dims::kTokenEmb;     // 64
constexpr std::size_t kLH = Dims::kLstmHidden;    // 196
}  // namespace

struct LstmBaseline::Work {
  struct Side {
    std::vector<double> xs;
    nn::LstmRun run;
    std::vector<double> scale;
    std::vector<double> r;
  };
  Side sides[2];
  std::vector<double> concat;
  std::vector<double> hid_post;
  std::vector<double> logits;
  std::vector<double> probs;
  int label = -1;
  std::vector<double> d_xs, d_r, d_concat, d_hid_post, d_logits, d_final;
};

LstmBaseline::LstmBaseline(std::size_t token_vocab, int num_classes,
                           const nn::TrainConfig& config)
    : num_classes_(num_classes), config_(config), work_(std::make_unique<Work>()) {
  config_.validate();
  if (num_classes < 2) throw nn::ConfigError("need at least two classes");
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  init_embedding(tok_emb_, token_vocab, kTok, rng);
  lstm_.init(kTok, kLH, rng);
  cls_hidden_.init(2 * kLH, Dims::kClassifierHidden, nn::Activation::Tanh, rng);
  cls_out_.init(Dims::kClassifierHidden, static_cast<std::size_t>(num_classes),
                nn::Activation::Identity, rng);
}

LstmBaseline::LstmBaseline(LstmBaseline&&) noexcept = default;
LstmBaseline& LstmBaseline::operator=(LstmBaseline&&) noexcept = default;
LstmBaseline::~LstmBaseline() = default;

nn::ParamList LstmBaseline::params() {
  return {
      {"tok_emb", &tok_emb_},           {"lstm.wx", &lstm_.wx},
      {"lstm.wh", &lstm_.wh},           {"lstm.b", &lstm_.b},
      {"cls_hidden.w", &cls_hidden_.w}, {"cls_hidden.b", &cls_hidden_.b},
      {"cls_out.w", &cls_out_.w},       {"cls_out.b", &cls_out_.b},
  };
}

std::size_t LstmBaseline::param_count() const {
  std::size_t n = 0;
  for (const auto& p : const_cast<LstmBaseline*>(this)->params()) n += p.tensor->v.size();
  return n;
}

double LstmBaseline::forward(const EncodedEdit& edit, bool training, Rng* rng,
                             Work& work) const {
  for (int s = 0; s < 2; ++s) {
    const auto& ids = s == 0 ? edit.old_tokens : edit.new_tokens;
    Work::Side& side = work.sides[s];
    const std::size_t t = ids.size();
    if (t == 0) throw nn::EmptySequence("token sequence is empty");
    side.xs.resize(t * kTok);
    for (std::size_t step = 0; step < t; ++step)
      std::memcpy(side.xs.data() + step * kTok,
                  tok_emb_.v.data() + static_cast<std::size_t>(ids[step]) * kTok,
                  kTok * sizeof(double));
    nn::lstm_forward(lstm_, side.xs.data(), t, side.run);
    fill_scales(side.scale, kLH, config_.dropout.baseline_lstm, training, rng);
    side.r.resize(kLH);
    const double* final_h = side.run.h.data() + (t - 1) * kLH;
    for (std::size_t j = 0; j < kLH; ++j) side.r[j] = final_h[j] * side.scale[j];
  }

  work.concat.resize(2 * kLH);
  std::memcpy(work.concat.data(), work.sides[0].r.data(), kLH * sizeof(double));
  std::memcpy(work.concat.data() + kLH, work.sides[1].r.data(), kLH * sizeof(double));

  work.hid_post.resize(Dims::kClassifierHidden);
  cls_hidden_.forward(work.concat.data(), work.hid_post.data());
  work.logits.resize(static_cast<std::size_t>(num_classes_));
  cls_out_.forward(work.hid_post.data(), work.logits.data());
  auto sm = nn::softmax_cross_entropy(work.logits, edit.label < 0 ? 0 : edit.label);
  work.probs = std::move(sm.probs);
  work.label = edit.label;
  return edit.label < 0 ? 0.0 : sm.loss;
}

void LstmBaseline::backward(const EncodedEdit& edit, double loss_scale, Work& work) {
  const std::size_t k = static_cast<std::size_t>(num_classes_);
  const std::size_t ch = Dims::kClassifierHidden;
  work.d_logits.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j)
    work.d_logits[j] =
        (work.probs[j] - (static_cast<int>(j) == work.label ? 1.0 : 0.0)) * loss_scale;

  work.d_hid_post.assign(ch, 0.0);
  cls_out_.backward(work.hid_post.data(), work.logits.data(), work.d_logits.data(),
                    work.d_hid_post.data());
  work.d_concat.assign(2 * kLH, 0.0);
  cls_hidden_.backward(work.concat.data(), work.hid_post.data(), work.d_hid_post.data(),
                       work.d_concat.data());

  for (int s = 0; s < 2; ++s) {
    Work::Side& side = work.sides[s];
    const auto& ids = s == 0 ? edit.old_tokens : edit.new_tokens;
    const std::size_t t = ids.size();

    work.d_final.assign(kLH, 0.0);
    const double* d_r = work.d_concat.data() + static_cast<std::size_t>(s) * kLH;
    for (std::size_t j = 0; j < kLH; ++j) work.d_final[j] = d_r[j] * side.scale[j];

    work.d_xs.assign(t * kTok, 0.0);
    nn::lstm_backward(lstm_, side.xs.data(), t, side.run, nullptr, work.d_final.data(),
                      work.d_xs.data());
    for (std::size_t step = 0; step < t; ++step) {
      const int id = ids[step];
      if (id == nn::kPadId) continue;
      double* g = tok_emb_.g.data() + static_cast<std::size_t>(id) * kTok;
      const double* src = work.d_xs.data() + step * kTok;
      for (std::size_t j = 0; j < kTok; ++j) g[j] += src[j];
    }
  }
}

double LstmBaseline::forward_backward(const EncodedEdit& edit, double loss_scale,
                                      bool training, Rng* dropout_rng) {
  double loss = forward(edit, training, training ? dropout_rng : nullptr, *work_);
  backward(edit, loss_scale, *work_);
  return loss;
}

std::vector<double> LstmBaseline::encode_side(std::span<const int> tokens) const {
  const std::size_t t = tokens.size();
  if (t == 0) throw nn::EmptySequence("token sequence is empty");
  std::vector<double> xs(t * kTok);
  for (std::size_t step = 0; step < t; ++step)
    std::memcpy(xs.data() + step * kTok,
                tok_emb_.v.data() + static_cast<std::size_t>(tokens[step]) * kTok,
                kTok * sizeof(double));
  nn::LstmRun run;
  nn::lstm_forward(lstm_, xs.data(), t, run);
  std::vector<double> r(kLH);
  std::copy_n(run.h.data() + (t - 1) * kLH, kLH, r.begin());
  return r;
}

std::vector<double> LstmBaseline::prelogits(std::span<const double> r_old,
                                            std::span<const double> r_new) const {
  if (r_old.size() != kLH || r_new.size() != kLH)
    throw nn::ShapeError("baseline side representations must be 196-D");
  std::vector<double> concat(2 * kLH);
  std::copy(r_old.begin(), r_old.end(), concat.begin());
  std::copy(r_new.begin(), r_new.end(), concat.begin() + kLH);
  std::vector<double> hid(Dims::kClassifierHidden);
  cls_hidden_.forward(concat.data(), hid.data());
  return hid;
}

std::vector<double> LstmBaseline::classify(std::span<const double> r_old,
                                           std::span<const double> r_new) const {
  std::vector<double> hid = prelogits(r_old, r_new);
  std::vector<double> logits(static_cast<std::size_t>(num_classes_));
  cls_out_.forward(hid.data(), logits.data());
  softmax_inplace(logits);
  return logits;
}

std::vector<double> LstmBaseline::predict_proba(const EncodedEdit& edit) const {
  auto r_old = encode_side(edit.old_tokens);
  auto r_new = encode_side(edit.new_tokens);
  return classify(r_old, r_new);
}

std::vector<double> LstmBaseline::prelogits_of(const EncodedEdit& edit) const {
  auto r_old = encode_side(edit.old_tokens);
  auto r_new = encode_side(edit.new_tokens);
  return prelogits(r_old, r_new);
}

int LstmBaseline::predict(const EncodedEdit& edit) const {
  auto p = predict_proba(edit);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

double LstmBaseline::accuracy(std::span<const EncodedEdit> samples) const {
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : samples)
    if (predict(s) == s.label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

LstmBaseline LstmBaseline::train(std::span<const EncodedEdit> samples,
                                 std::size_t token_vocab, int num_classes,
                                 const nn::TrainConfig& config, TrainHistory* history) {
  LstmBaseline model(token_vocab, num_classes, config);
  run_training(model, samples, config, history);
  return model;
}

// ---------------------------------------------------------------------------
// Bag-of-words + SVM
// ---------------------------------------------------------------------------

void BowVectorizer::fit(const data::Dataset& train, BowMode mode) {
  mode_ = mode;
  vocab_.clear();
  idf_.clear();
  // merged token set over both sides of the training edits
  for (const auto& e : train.edits) {
    for (const auto& t : data::token_texts(e.old_source)) vocab_.try_emplace(t, 0);
    for (const auto& t : data::token_texts(e.new_source)) vocab_.try_emplace(t, 0);
  }
  int next = 0;
  for (auto& [tok, id] : vocab_) id = next++;

  if (mode_ == BowMode::TfIdf) {
    std::vector<int> df(vocab_.size(), 0);
    std::size_t documents = 0;
    auto count_doc = [&](const std::string& src) {
      ++documents;
      std::set<int> present;
      for (const auto& t : data::token_texts(src)) {
        auto it = vocab_.find(t);
        if (it != vocab_.end()) present.insert(it->second);
      }
      for (int id : present) ++df[static_cast<std::size_t>(id)];
    };
    for (const auto& e : train.edits) {
      count_doc(e.old_source);
      count_doc(e.new_source);
    }
    idf_.resize(vocab_.size());
    for (std::size_t i = 0; i < idf_.size(); ++i)
      idf_[i] = 1.0 + std::log((1.0 + static_cast<double>(documents)) /
                               (1.0 + static_cast<double>(df[i])));
  }
}

std::vector<double> BowVectorizer::vectorize(const data::CodeEdit& edit) const {
  const std::size_t v = vocab_.size();
  std::vector<double> out(2 * v, 0.0);
  auto fill_side = [&](const std::string& src, double* part) {
    for (const auto& t : data::token_texts(src)) {
      auto it = vocab_.find(t);
      if (it != vocab_.end()) part[it->second] += 1.0;
    }
    if (mode_ == BowMode::TfIdf) {
      double norm = 0.0;
      for (std::size_t i = 0; i < v; ++i) {
        part[i] *= idf_[i];
        norm += part[i] * part[i];
      }
      if (norm > 0.0) {
        norm = 1.0 / std::sqrt(norm);
        for (std::size_t i = 0; i < v; ++i) part[i] *= norm;
      }
    }
  };
  fill_side(edit.old_source, out.data());
  fill_side(edit.new_source, out.data() + v);
  return out;
}

void BowVectorizer::restore(BowMode mode, std::map<std::string, int> vocab,
                            std::vector<double> idf) {
  mode_ = mode;
  vocab_ = std::move(vocab);
  idf_ = std::move(idf);
}

void RffMap::init(std::size_t in_dim, std::size_t d, double gamma_, std::uint64_t seed) {
  gamma = gamma_;
  w = Tensor({d, in_dim});
  b.resize(d);
  Rng rng(seed ^ 0xd1b54a32d192ed03ULL);
  const double sigma = std::sqrt(2.0 * gamma);
  for (double& x : w.v) x = rng.normal() * sigma;
  for (double& x : b) x = rng.uniform(0.0, 2.0 * M_PI);
}

std::vector<double> RffMap::apply(std::span<const double> x) const {
  const std::size_t d = w.rows(), in = w.cols();
  if (x.size() != in) throw nn::ShapeError("RFF input dimension mismatch");
  std::vector<double> z(d);
  const double scale = std::sqrt(2.0 / static_cast<double>(d));
  for (std::size_t j = 0; j < d; ++j)
    z[j] = scale * std::cos(nn::dot(w.v.data() + j * in, x.data(), in) + b[j]);
  return z;
}

SvmModel SvmModel::train(const std::vector<std::vector<double>>& features,
                         const std::vector<int>& labels, int num_classes,
                         SvmKernel kernel, const SvmConfig& config) {
  if (features.empty() || features.size() != labels.size())
    throw nn::ShapeError("features/labels size mismatch");
  std::vector<int> class_counts(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw nn::IndexError("label out of range");
    ++class_counts[static_cast<std::size_t>(y)];
  }
  int present = 0;
  for (int c : class_counts)
    if (c > 0) ++present;
  if (present < 2) throw DegenerateLabels("need at least two distinct classes");
  for (std::size_t c = 0; c < class_counts.size(); ++c)
    if (class_counts[c] > 0 && class_counts[c] < 2)
      throw DegenerateLabels("class " + std::to_string(c) + " has fewer than 2 samples");

  SvmModel model;
  model.kernel_ = kernel;
  const std::size_t in_dim = features[0].size();

  std::vector<std::vector<double>> x;
  if (kernel == SvmKernel::Rbf) {
    double gamma = config.gamma > 0.0 ? config.gamma : 1.0 / static_cast<double>(in_dim);
    model.rff_.init(in_dim, static_cast<std::size_t>(config.rff_dim), gamma, config.seed);
    x.reserve(features.size());
    for (const auto& f : features) x.push_back(model.rff_.apply(f));
  } else {
    x = features;
  }

  const std::size_t n = x.size(), d = x[0].size();
  const double lambda = 1.0 / (config.c * static_cast<double>(n));
  model.w_ = Tensor({static_cast<std::size_t>(num_classes), d});
  model.b_.assign(static_cast<std::size_t>(num_classes), 0.0);

  // Subgradient descent on the hinge objective with the bias folded in as
  // a regularized augmented coordinate; the returned weights are the tail
  // average of the iterates.
  for (int k = 0; k < num_classes; ++k) {
    std::vector<double> w(d, 0.0);
    double b = 0.0;
    double* w_avg = model.w_.v.data() + static_cast<std::size_t>(k) * d;
    double& b_avg = model.b_[static_cast<std::size_t>(k)];
    Rng rng(config.seed + 0x100001b3ULL * static_cast<std::uint64_t>(k + 1));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    long t = 0;
    long averaged = 0;
    const long average_from = static_cast<long>(config.epochs) * static_cast<long>(n) / 2;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t i : order) {
        ++t;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double y = labels[i] == k ? 1.0 : -1.0;
        const double margin = y * (nn::dot(w.data(), x[i].data(), d) + b);
        const double shrink = 1.0 - eta * lambda;
        for (std::size_t j = 0; j < d; ++j) w[j] *= shrink;
        b *= shrink;
        if (margin < 1.0) {
          const double step = eta * y;
          const double* xi = x[i].data();
          for (std::size_t j = 0; j < d; ++j) w[j] += step * xi[j];
          b += step;
        }
        if (t > average_from) {
          ++averaged;
          const double a = 1.0 / static_cast<double>(averaged);
          for (std::size_t j = 0; j < d; ++j) w_avg[j] += a * (w[j] - w_avg[j]);
          b_avg += a * (b - b_avg);
        }
      }
    }
    if (averaged == 0) {
      std::copy(w.begin(), w.end(), w_avg);
      b_avg = b;
    }
  }
  return model;
}

std::vector<double> SvmModel::mapped(std::span<const double> x) const {
  if (kernel_ == SvmKernel::Rbf) return rff_.apply(x);
  return std::vector<double>(x.begin(), x.end());
}

int SvmModel::predict(std::span<const double> features) const {
  std::vector<double> x = mapped(features);
  const std::size_t k = w_.rows(), d = w_.cols();
  if (x.size() != d) throw nn::ShapeError("feature dimension mismatch");
  int best = 0;
  double best_score = -1e300;
  for (std::size_t c = 0; c < k; ++c) {
    double s = nn::dot(w_.v.data() + c * d, x.data(), d) + b_[c];
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(c);
    }
  }
  return best;
}

double SvmModel::accuracy(const std::vector<std::vector<double>>& features,
                          const std::vector<int>& labels) const {
  if (features.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < features.size(); ++i)
    if (predict(features[i]) == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(features.size());
}

void SvmModel::restore(SvmKernel kernel, Tensor w, std::vector<double> b, RffMap rff) {
  kernel_ = kernel;
  w_ = std::move(w);
  b_ = std::move(b);
  rff_ = std::move(rff);
}


// ---------------------------------------------------------------------------
// Families, classifier wrappers and checkpoints
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> class_labels_of(const data::Dataset& train) {
  std::vector<std::string> labels(train.class_index.size());
  for (const auto& [label, idx] : train.class_index)
    labels[static_cast<std::size_t>(idx)] = label;
  return labels;
}

std::vector<EncodedEdit> encode_all(const data::Dataset& ds,
                                    const pathctx::Vocabulary& vocab) {
  std::vector<EncodedEdit> out;
  out.reserve(ds.edits.size());
  for (const auto& e : ds.edits)
    out.push_back(encode_for_models(e, vocab, ds.class_index));
  return out;
}

pathctx::Vocabulary fit_vocabulary(const data::Dataset& train) {
  std::vector<pathctx::EditPathContexts> encs;
  encs.reserve(train.edits.size());
  for (const auto& e : train.edits)
    encs.push_back(pathctx::encode_edit(minilang::parse_source(e.old_source),
                                        minilang::parse_source(e.new_source)));
  auto tokens = token_corpus_of(train);
  // min_count 2: singletons map to UNK during training, so the UNK row is
  // trained rather than left at its random initialization when unseen
  // tokens appear at prediction time
  return pathctx::build_vocabulary(encs, tokens, 2);
}

json vocab_to_json(const std::unordered_map<std::string, int>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

std::unordered_map<std::string, int> vocab_from_json(const json& j) {
  std::unordered_map<std::string, int> m;
  for (auto it = j.begin(); it != j.end(); ++it) m[it.key()] = it.value().get<int>();
  return m;
}

json sidecar_common(const std::string& kind, const std::vector<std::string>& classes,
                    const nn::TrainConfig& config, const pathctx::Vocabulary& vocab) {
  json j;
  j["model"] = kind;
  j["classes"] = classes;
  j["config"] = config;
  j["vocab"]["subtoken"] = vocab_to_json(vocab.subtoken_to_id);
  j["vocab"]["pathlabel"] = vocab_to_json(vocab.pathlabel_to_id);
  j["vocab"]["token"] = vocab_to_json(vocab.token_to_id);
  j["vocab_hashes"]["subtoken"] = checkpoint::vocab_hash(vocab.subtoken_to_id);
  j["vocab_hashes"]["pathlabel"] = checkpoint::vocab_hash(vocab.pathlabel_to_id);
  j["vocab_hashes"]["token"] = checkpoint::vocab_hash(vocab.token_to_id);
  return j;
}

void write_sidecar(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path.string() + ".json", std::ios::binary);
  if (!out) throw data::IoError("cannot write sidecar for " + path.string());
  out << j.dump(2) << "\n";
}

json read_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path.string() + ".json", std::ios::binary);
  if (!in) throw data::IoError("cannot read sidecar for " + path.string());
  return json::parse(in);
}

pathctx::Vocabulary vocab_from_sidecar(const json& j) {
  pathctx::Vocabulary v;
  v.subtoken_to_id = vocab_from_json(j["vocab"]["subtoken"]);
  v.pathlabel_to_id = vocab_from_json(j["vocab"]["pathlabel"]);
  v.token_to_id = vocab_from_json(j["vocab"]["token"]);
  return v;
}

class Edit2VecClassifier : public Classifier {
 public:
  Edit2VecClassifier(Edit2Vec model, pathctx::Vocabulary vocab,
                     std::vector<std::string> classes)
      : model_(std::move(model)), vocab_(std::move(vocab)), classes_(std::move(classes)) {}

  std::string predict(const data::CodeEdit& edit) const override {
    return classes_[static_cast<std::size_t>(model_.predict(encode(edit)))];
  }
  std::vector<double> predict_proba(const data::CodeEdit& edit) const override {
    return model_.predict_proba(encode(edit));
  }
  std::optional<std::vector<double>> prelogits(const data::CodeEdit& edit) const override {
    return model_.prelogits_of(encode(edit));
  }
  const std::vector<std::string>& class_labels() const override { return classes_; }
  std::size_t param_count() const override { return model_.param_count(); }

  void save(const std::filesystem::path& path) const override;

  Edit2Vec& model() { return model_; }

 private:
  EncodedEdit encode(const data::CodeEdit& edit) const {
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < classes_.size(); ++i)
      index[classes_[i]] = static_cast<int>(i);
    return encode_for_models(edit, vocab_, index);
  }

  mutable Edit2Vec model_;
  pathctx::Vocabulary vocab_;
  std::vector<std::string> classes_;
};

class LstmClassifier : public Classifier {
 public:
  LstmClassifier(LstmBaseline model, pathctx::Vocabulary vocab,
                 std::vector<std::string> classes)
      : model_(std::move(model)), vocab_(std::move(vocab)), classes_(std::move(classes)) {}

  std::string predict(const data::CodeEdit& edit) const override {
    return classes_[static_cast<std::size_t>(model_.predict(encode(edit)))];
  }
  std::vector<double> predict_proba(const data::CodeEdit& edit) const override {
    return model_.predict_proba(encode(edit));
  }
  std::optional<std::vector<double>> prelogits(const data::CodeEdit& edit) const override {
    return model_.prelogits_of(encode(edit));
  }
  const std::vector<std::string>& class_labels() const override { return classes_; }
  std::size_t param_count() const override { return model_.param_count(); }

  void save(const std::filesystem::path& path) const override;

  LstmBaseline& model() { return model_; }

 private:
  EncodedEdit encode(const data::CodeEdit& edit) const {
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < classes_.size(); ++i)
      index[classes_[i]] = static_cast<int>(i);
    return encode_for_models(edit, vocab_, index);
  }

  mutable LstmBaseline model_;
  pathctx::Vocabulary vocab_;
  std::vector<std::string> classes_;
};

class BowClassifier : public Classifier {
 public:
  BowClassifier(BowVectorizer vectorizer, SvmModel svm, std::vector<std::string> classes,
                std::string family_name)
      : vectorizer_(std::move(vectorizer)),
        svm_(std::move(svm)),
        classes_(std::move(classes)),
        family_name_(std::move(family_name)) {}

  std::string predict(const data::CodeEdit& edit) const override {
    return classes_[static_cast<std::size_t>(svm_.predict(vectorizer_.vectorize(edit)))];
  }
  std::vector<double> predict_proba(const data::CodeEdit& edit) const override {
    // SVMs yield margins, not probabilities; report a one-hot on the argmax.
    std::vector<double> p(classes_.size(), 0.0);
    p[static_cast<std::size_t>(svm_.predict(vectorizer_.vectorize(edit)))] = 1.0;
    return p;
  }
  const std::vector<std::string>& class_labels() const override { return classes_; }
  std::size_t param_count() const override {
    return svm_.weights().v.size() + svm_.bias().size();
  }

  void save(const std::filesystem::path& path) const override;

 private:
  BowVectorizer vectorizer_;
  SvmModel svm_;
  std::vector<std::string> classes_;
  std::string family_name_;
};

void Edit2VecClassifier::save(const std::filesystem::path& path) const {
  auto& m = model_;
  std::vector<std::pair<std::string, const Tensor*>> arrays;
  for (const auto& p : m.params()) arrays.emplace_back(p.name, p.tensor);
  checkpoint::write_arrays(path, arrays);
  write_sidecar(path, sidecar_common("edit2vec", classes_, m.config(), vocab_));
}

void LstmClassifier::save(const std::filesystem::path& path) const {
  auto& m = model_;
  std::vector<std::pair<std::string, const Tensor*>> arrays;
  for (const auto& p : m.params()) arrays.emplace_back(p.name, p.tensor);
  checkpoint::write_arrays(path, arrays);
  write_sidecar(path, sidecar_common("lstm", classes_, m.config(), vocab_));
}

void BowClassifier::save(const std::filesystem::path& path) const {
  std::vector<std::pair<std::string, const Tensor*>> arrays;
  arrays.emplace_back("svm.w", &svm_.weights());
  Tensor b({svm_.bias().size()});
  b.v = svm_.bias();
  arrays.emplace_back("svm.b", &b);
  Tensor idf({vectorizer_.idf().size()});
  idf.v = vectorizer_.idf();
  arrays.emplace_back("bow.idf", &idf);
  Tensor rff_b({svm_.rff().b.size()});
  rff_b.v = svm_.rff().b;
  if (svm_.kernel() == SvmKernel::Rbf) {
    arrays.emplace_back("rff.w", &svm_.rff().w);
    arrays.emplace_back("rff.b", &rff_b);
  }
  checkpoint::write_arrays(path, arrays);

  json j;
  j["model"] = family_name_;
  j["classes"] = classes_;
  j["bow_mode"] = vectorizer_.mode() == BowMode::Count ? "count" : "tfidf";
  j["kernel"] = svm_.kernel() == SvmKernel::Linear ? "linear" : "rbf";
  j["rff_gamma"] = svm_.rff().gamma;
  json vocab = json::object();
  for (const auto& [k, v] : vectorizer_.vocab()) vocab[k] = v;
  j["vocab"]["bow"] = vocab;
  j["vocab_hashes"]["bow"] = checkpoint::vocab_hash(vectorizer_.vocab());
  write_sidecar(path, j);
}

class Edit2VecFamily : public ModelFamily {
 public:
  std::string name() const override { return "edit2vec"; }
  std::unique_ptr<Classifier> fit(const data::Dataset& train, const nn::TrainConfig& config,
                                  TrainHistory* history) const override {
    if (train.edits.empty()) throw nn::ConfigError("empty training set");
    auto vocab = fit_vocabulary(train);
    auto encoded = encode_all(train, vocab);
    auto model = Edit2Vec::train(encoded, vocab.subtoken_count(), vocab.pathlabel_count(),
                                 static_cast<int>(train.class_index.size()), config,
                                 history);
    return std::make_unique<Edit2VecClassifier>(std::move(model), std::move(vocab),
                                                class_labels_of(train));
  }
};

class LstmFamily : public ModelFamily {
 public:
  std::string name() const override { return "lstm"; }
  std::unique_ptr<Classifier> fit(const data::Dataset& train, const nn::TrainConfig& config,
                                  TrainHistory* history) const override {
    if (train.edits.empty()) throw nn::ConfigError("empty training set");
    auto vocab = fit_vocabulary(train);
    auto encoded = encode_all(train, vocab);
    auto model = LstmBaseline::train(encoded, vocab.token_count(),
                                     static_cast<int>(train.class_index.size()), config,
                                     history);
    return std::make_unique<LstmClassifier>(std::move(model), std::move(vocab),
                                            class_labels_of(train));
  }
};

class BowFamily : public ModelFamily {
 public:
  BowFamily(BowMode mode, SvmKernel kernel) : mode_(mode), kernel_(kernel) {}

  std::string name() const override {
    std::string n = "bow-";
    n += mode_ == BowMode::Count ? "count" : "tfidf";
    n += kernel_ == SvmKernel::Linear ? "-linear" : "-rbf";
    return n;
  }

  std::unique_ptr<Classifier> fit(const data::Dataset& train, const nn::TrainConfig& config,
                                  TrainHistory* history) const override {
    if (train.edits.empty()) throw nn::ConfigError("empty training set");
    BowVectorizer vec;
    vec.fit(train, mode_);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    x.reserve(train.edits.size());
    for (const auto& e : train.edits) {
      x.push_back(vec.vectorize(e));
      y.push_back(train.class_index.at(e.label));
    }
    SvmConfig svm_config;
    svm_config.seed = config.seed;
    auto svm = SvmModel::train(x, y, static_cast<int>(train.class_index.size()), kernel_,
                               svm_config);
    if (history) {
      history->epochs_run = svm_config.epochs;
      history->final_train_accuracy = svm.accuracy(x, y);
    }
    return std::make_unique<BowClassifier>(std::move(vec), std::move(svm),
                                           class_labels_of(train), name());
  }

 private:
  BowMode mode_;
  SvmKernel kernel_;
};

}  // namespace

const std::vector<std::string>& family_names() {
  static const std::vector<std::string> names = {
      "edit2vec",        "lstm",          "bow-count-linear",
      "bow-count-rbf",   "bow-tfidf-linear", "bow-tfidf-rbf",
  };
  return names;
}

std::unique_ptr<ModelFamily> make_family(const std::string& name) {
  if (name == "edit2vec") return std::make_unique<Edit2VecFamily>();
  if (name == "lstm") return std::make_unique<LstmFamily>();
  if (name == "bow-count-linear")
    return std::make_unique<BowFamily>(BowMode::Count, SvmKernel::Linear);
  if (name == "bow-count-rbf")
    return std::make_unique<BowFamily>(BowMode::Count, SvmKernel::Rbf);
  if (name == "bow-tfidf-linear")
    return std::make_unique<BowFamily>(BowMode::TfIdf, SvmKernel::Linear);
  if (name == "bow-tfidf-rbf")
    return std::make_unique<BowFamily>(BowMode::TfIdf, SvmKernel::Rbf);
  throw std::invalid_argument("unknown model family: " + name);
}

std::unique_ptr<Classifier> load_checkpoint(const std::filesystem::path& path) {
  json side = read_sidecar(path);
  auto arrays = checkpoint::read_arrays(path);
  const std::string kind = side.at("model").get<std::string>();
  std::vector<std::string> classes = side.at("classes").get<std::vector<std::string>>();

  auto fetch = [&](const std::string& name) -> Tensor& {
    auto it = arrays.find(name);
    if (it == arrays.end())
      throw checkpoint::CheckpointError("checkpoint missing array " + name);
    return it->second;
  };

  if (kind == "edit2vec" || kind == "lstm") {
    nn::TrainConfig config = side.at("config").get<nn::TrainConfig>();
    pathctx::Vocabulary vocab = vocab_from_sidecar(side);
    if (kind == "edit2vec") {
      Edit2Vec model(vocab.subtoken_count(), vocab.pathlabel_count(),
                     static_cast<int>(classes.size()), config);
      for (auto& p : model.params()) {
        Tensor& saved = fetch(p.name);
        if (saved.v.size() != p.tensor->v.size())
          throw checkpoint::CheckpointError("array size mismatch for " + p.name);
        p.tensor->v = saved.v;
      }
      return std::make_unique<Edit2VecClassifier>(std::move(model), std::move(vocab),
                                                  std::move(classes));
    }
    LstmBaseline model(vocab.token_count(), static_cast<int>(classes.size()), config);
    for (auto& p : model.params()) {
      Tensor& saved = fetch(p.name);
      if (saved.v.size() != p.tensor->v.size())
        throw checkpoint::CheckpointError("array size mismatch for " + p.name);
      p.tensor->v = saved.v;
    }
    return std::make_unique<LstmClassifier>(std::move(model), std::move(vocab),
                                            std::move(classes));
  }

  if (kind.rfind("bow-", 0) == 0) {
    BowVectorizer vec;
    std::map<std::string, int> vocab;
    for (auto it = side["vocab"]["bow"].begin(); it != side["vocab"]["bow"].end(); ++it)
      vocab[it.key()] = it.value().get<int>();
    BowMode mode = side.at("bow_mode") == "count" ? BowMode::Count : BowMode::TfIdf;
    vec.restore(mode, std::move(vocab), fetch("bow.idf").v);

    SvmKernel kernel = side.at("kernel") == "linear" ? SvmKernel::Linear : SvmKernel::Rbf;
    RffMap rff;
    if (kernel == SvmKernel::Rbf) {
      rff.w = fetch("rff.w");
      rff.b = fetch("rff.b").v;
      rff.gamma = side.at("rff_gamma").get<double>();
    }
    SvmModel svm;
    svm.restore(kernel, fetch("svm.w"), fetch("svm.b").v, std::move(rff));
    return std::make_unique<BowClassifier>(std::move(vec), std::move(svm),
                                           std::move(classes), kind);
  }

  throw checkpoint::CheckpointError("unknown checkpoint model kind: " + kind);
}


// ---------------------------------------------------------------------------
// Gradient-check suite
// ---------------------------------------------------------------------------

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

nn::GradCheckReport check_dense() {
  Rng rng(11);
  nn::Dense layer;
  layer.init(7, 5, nn::Activation::Tanh, rng);
  auto x = random_vec(7, rng);
  auto sens = random_vec(5, rng);
  std::vector<double> y(5);
  auto loss = [&] {
    layer.forward(x.data(), y.data());
    return nn::dot(sens.data(), y.data(), 5);
  };
  auto grads = [&] {
    layer.w.zero_grad();
    layer.b.zero_grad();
    layer.forward(x.data(), y.data());
    layer.backward(x.data(), y.data(), sens.data(), nullptr);
  };
  return nn::grad_check({{"w", &layer.w}, {"b", &layer.b}}, loss, grads);
}

nn::GradCheckReport check_lstm() {
  Rng rng(17);
  nn::LstmCell cell;
  cell.init(5, 6, rng);
  const std::size_t t = 4;
  auto xs = random_vec(t * 5, rng);
  auto sens = random_vec(6, rng);
  nn::LstmRun run;
  auto loss = [&] {
    nn::lstm_forward(cell, xs.data(), t, run);
    return nn::dot(sens.data(), run.h.data() + (t - 1) * 6, 6);
  };
  auto grads = [&] {
    cell.wx.zero_grad();
    cell.wh.zero_grad();
    cell.b.zero_grad();
    nn::lstm_forward(cell, xs.data(), t, run);
    nn::lstm_backward(cell, xs.data(), t, run, nullptr, sens.data(), nullptr);
  };
  return nn::grad_check({{"wx", &cell.wx}, {"wh", &cell.wh}, {"b", &cell.b}}, loss, grads);
}

nn::GradCheckReport check_bilstm() {
  Rng rng(23);
  nn::LstmCell fwd, bwd;
  fwd.init(4, 5, rng);
  bwd.init(4, 5, rng);
  const std::size_t t = 3;
  auto xs = random_vec(t * 4, rng);
  auto sens = random_vec(10, rng);
  std::vector<double> xs_rev(t * 4);
  for (std::size_t s = 0; s < t; ++s)
    std::copy_n(xs.data() + (t - 1 - s) * 4, 4, xs_rev.data() + s * 4);
  nn::LstmRun rf, rb;
  auto loss = [&] {
    nn::lstm_forward(fwd, xs.data(), t, rf);
    nn::lstm_forward(bwd, xs_rev.data(), t, rb);
    return nn::dot(sens.data(), rf.h.data() + (t - 1) * 5, 5) +
           nn::dot(sens.data() + 5, rb.h.data() + (t - 1) * 5, 5);
  };
  auto grads = [&] {
    for (auto* tns : {&fwd.wx, &fwd.wh, &fwd.b, &bwd.wx, &bwd.wh, &bwd.b}) tns->zero_grad();
    nn::lstm_forward(fwd, xs.data(), t, rf);
    nn::lstm_forward(bwd, xs_rev.data(), t, rb);
    nn::lstm_backward(fwd, xs.data(), t, rf, nullptr, sens.data(), nullptr);
    nn::lstm_backward(bwd, xs_rev.data(), t, rb, nullptr, sens.data() + 5, nullptr);
  };
  return nn::grad_check({{"fwd.wx", &fwd.wx},
                         {"fwd.wh", &fwd.wh},
                         {"fwd.b", &fwd.b},
                         {"bwd.wx", &bwd.wx},
                         {"bwd.wh", &bwd.wh},
                         {"bwd.b", &bwd.b}},
                        loss, grads);
}

nn::GradCheckReport check_attention() {
  // Checked through a tiny edit2vec-shaped pipeline: scorer parameters only,
  // with the analytic path reproduced by hand.
  Rng rng(31);
  nn::AttnScorer scorer;
  scorer.init(6, 5, rng);
  const std::size_t n = 4, d = 6;
  nn::Tensor items({n, d});
  for (double& v : items.v) v = rng.uniform(-1.0, 1.0);
  std::vector<bool> mask = {true, true, true, true};
  auto sens = random_vec(d, rng);

  auto loss = [&] {
    auto res = nn::attention_pool(items, mask, scorer);
    return nn::dot(sens.data(), res.pooled.data(), d);
  };
  auto grads = [&] {
    for (auto* t : {&scorer.hidden.w, &scorer.hidden.b, &scorer.out.w, &scorer.out.b})
      t->zero_grad();
    auto res = nn::attention_pool(items, mask, scorer);
    // d pooled / d score_i via softmax jacobian
    std::vector<double> dw(n), hidden(5);
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dw[i] = nn::dot(sens.data(), items.v.data() + i * d, d);
      wsum += res.weights[i] * dw[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double ds = res.weights[i] * (dw[i] - wsum);
      scorer.hidden.forward(items.v.data() + i * d, hidden.data());
      double score;
      scorer.out.forward(hidden.data(), &score);
      std::vector<double> d_hidden(5, 0.0);
      scorer.out.backward(hidden.data(), &score, &ds, d_hidden.data());
      scorer.hidden.backward(items.v.data() + i * d, hidden.data(), d_hidden.data(),
                             nullptr);
    }
  };
  return nn::grad_check({{"hidden.w", &scorer.hidden.w},
                         {"hidden.b", &scorer.hidden.b},
                         {"out.w", &scorer.out.w},
                         {"out.b", &scorer.out.b}},
                        loss, grads);
}

nn::GradCheckReport check_softmax_ce() {
  Rng rng(41);
  nn::Tensor logits({6});
  for (double& v : logits.v) v = rng.uniform(-2.0, 2.0);
  const int label = 2;
  auto loss = [&] { return nn::softmax_cross_entropy(logits.v, label).loss; };
  auto grads = [&] {
    logits.ensure_grad();
    logits.zero_grad();
    auto res = nn::softmax_cross_entropy(logits.v, label);
    for (std::size_t i = 0; i < logits.v.size(); ++i)
      logits.g[i] = res.probs[i] - (static_cast<int>(i) == label ? 1.0 : 0.0);
  };
  return nn::grad_check({{"logits", &logits}}, loss, grads);
}

nn::GradCheckReport check_edit2vec_micro(std::size_t max_checks) {
  nn::TrainConfig config;
  config.seed = 99;
  Edit2Vec model(9, 7, 3, config);

  EncodedEdit edit;
  edit.label = 1;
  EncodedContext c1{{2, 3}, {2, 3, 4}, {4}};
  EncodedContext c2{{5}, {5, 3, 6}, {6, 7, 8}};
  edit.old_contexts = {c1, c2};
  EncodedContext c3{{3, 4}, {4, 3, 2}, {2}};
  EncodedContext c4{{8}, {6, 5, 2}, {7}};
  edit.new_contexts = {c3, c4};

  auto params = model.params();
  auto loss = [&] { return model.forward_backward(edit, 0.0, false, nullptr); };
  auto grads = [&] {
    for (auto& p : params) {
      p.tensor->ensure_grad();
      p.tensor->zero_grad();
    }
    model.forward_backward(edit, 1.0, false, nullptr);
  };
  return nn::grad_check(params, loss, grads, 1e-5, max_checks);
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(std::size_t max_checks_per_tensor) {
  std::vector<GradCheckCase> cases;
  cases.push_back({"dense_tanh", check_dense()});
  cases.push_back({"lstm", check_lstm()});
  cases.push_back({"bilstm", check_bilstm()});
  cases.push_back({"attention_pool", check_attention()});
  cases.push_back({"softmax_cross_entropy", check_softmax_ce()});
  cases.push_back({"edit2vec_micro", check_edit2vec_micro(max_checks_per_tensor)});
  return cases;
}

}  // namespace editvec::models
