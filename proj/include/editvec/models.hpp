#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "editvec/data.hpp"
#include "editvec/nncore.hpp"
#include "editvec/pathctx.hpp"

namespace editvec::models {

// Architecture dimensions fixed by construction; asserted when models are
// built.
struct Dims {
  static constexpr int kSubtokenEmb = 32;
  static constexpr int kPathEmb = 128;
  static constexpr int kBilstmPerDir = 80;   // concatenates to the 160-D path vector
  static constexpr int kCpcv = 128;
  static constexpr int kEditVecR = 160;
  static constexpr int kLstmHidden = 196;
  static constexpr int kTokenEmb = 64;
  static constexpr int kClassifierHidden = 80;
  static constexpr int kAttnHidden = 128;
  static constexpr int kMaxSeqLen = 64;
};

struct EncodedContext {
  std::vector<int> left;   // sub-token ids
  std::vector<int> path;   // path-label ids
  std::vector<int> right;  // sub-token ids
};

struct EncodedEdit {
  std::vector<EncodedContext> old_contexts;  // real contexts only, <= 40
  std::vector<EncodedContext> new_contexts;
  std::vector<int> old_tokens;  // raw-token ids for the sequence baseline
  std::vector<int> new_tokens;
  int label = -1;
};

EncodedEdit encode_for_models(const data::CodeEdit& edit,
                              const pathctx::Vocabulary& vocab,
                              const std::map<std::string, int>& class_index,
                              int max_contexts = pathctx::kMaxContexts,
                              int max_seq_len = Dims::kMaxSeqLen);

// Tokenized sides of every edit, the token_corpus input to vocabulary
// fitting.
std::vector<std::vector<std::string>> token_corpus_of(const data::Dataset& dataset);

struct TrainHistory {
  std::vector<double> epoch_loss;
  double final_train_accuracy = 0.0;
  int epochs_run = 0;
};

// ---------------------------------------------------------------------------
// edit2vec: path-context encoder + attention code encoder + classifier,
// siamese over the old/new sides.
// ---------------------------------------------------------------------------

class Edit2Vec {
 public:
  Edit2Vec(std::size_t subtoken_vocab, std::size_t pathlabel_vocab, int num_classes,
           const nn::TrainConfig& config);
  Edit2Vec(Edit2Vec&&) noexcept;
  Edit2Vec& operator=(Edit2Vec&&) noexcept;
  ~Edit2Vec();

  static Edit2Vec train(std::span<const EncodedEdit> samples, std::size_t subtoken_vocab,
                        std::size_t pathlabel_vocab, int num_classes,
                        const nn::TrainConfig& config, TrainHistory* history = nullptr);

  // Compact path-context vector of one context (inference path).
  std::vector<double> pce_forward(const EncodedContext& ctx) const;
  // Attention-pooled 160-D side representation. cpcvs may include padded
  // rows; mask[i] marks real ones.
  std::vector<double> code_encoder_forward(const std::vector<std::vector<double>>& cpcvs,
                                           const std::vector<bool>& mask) const;
  // Softmax probabilities from the two side representations.
  std::vector<double> classify(std::span<const double> r_old,
                               std::span<const double> r_new) const;
  // 80-D classifier hidden layer (the layer before softmax).
  std::vector<double> prelogits(std::span<const double> r_old,
                                std::span<const double> r_new) const;

  std::vector<double> side_representation(const std::vector<EncodedContext>& ctxs) const;
  std::vector<double> predict_proba(const EncodedEdit& edit) const;
  std::vector<double> prelogits_of(const EncodedEdit& edit) const;
  int predict(const EncodedEdit& edit) const;

  double accuracy(std::span<const EncodedEdit> samples) const;

  nn::ParamList params();
  std::size_t param_count() const;
  int num_classes() const { return num_classes_; }
  const nn::TrainConfig& config() const { return config_; }

  // Cached training-path forward/backward; exposed for gradient checking.
  double forward_backward(const EncodedEdit& edit, double loss_scale, bool training,
                          Rng* dropout_rng);

 private:
  friend class Edit2VecTrainer;
  struct Work;

  double forward(const EncodedEdit& edit, bool training, Rng* dropout_rng, Work& work) const;
  void backward(const EncodedEdit& edit, double loss_scale, Work& work);

  nn::Tensor sub_emb_;   // [V_sub x 32]
  nn::Tensor path_emb_;  // [V_path x 128]
  nn::LstmCell lstm_fwd_, lstm_bwd_;
  nn::Dense pce_;         // 224 -> 128 tanh
  nn::AttnScorer attn_;   // 128 -> 128 relu -> 1
  nn::Dense ce_;          // 128 -> 160 tanh
  nn::Dense cls_hidden_;  // 320 -> 80 tanh
  nn::Dense cls_out_;     // 80 -> K
  int num_classes_;
  nn::TrainConfig config_;
  std::unique_ptr<Work> work_;  // reusable training workspace
};

// ---------------------------------------------------------------------------
// Sequence baseline: shared token embedding + shared LSTM over each side.
// ---------------------------------------------------------------------------

class LstmBaseline {
 public:
  LstmBaseline(std::size_t token_vocab, int num_classes, const nn::TrainConfig& config);
  LstmBaseline(LstmBaseline&&) noexcept;
  LstmBaseline& operator=(LstmBaseline&&) noexcept;
  ~LstmBaseline();

  static LstmBaseline train(std::span<const EncodedEdit> samples, std::size_t token_vocab,
                            int num_classes, const nn::TrainConfig& config,
                            TrainHistory* history = nullptr);

  // 196-D side representation of a token sequence (inference path).
  std::vector<double> encode_side(std::span<const int> tokens) const;
  std::vector<double> classify(std::span<const double> r_old,
                               std::span<const double> r_new) const;
  std::vector<double> prelogits(std::span<const double> r_old,
                                std::span<const double> r_new) const;

  std::vector<double> predict_proba(const EncodedEdit& edit) const;
  std::vector<double> prelogits_of(const EncodedEdit& edit) const;
  int predict(const EncodedEdit& edit) const;
  double accuracy(std::span<const EncodedEdit> samples) const;

  nn::ParamList params();
  std::size_t param_count() const;
  int num_classes() const { return num_classes_; }
  const nn::TrainConfig& config() const { return config_; }

  double forward_backward(const EncodedEdit& edit, double loss_scale, bool training,
                          Rng* dropout_rng);

 private:
  friend class LstmTrainer;
  struct Work;

  double forward(const EncodedEdit& edit, bool training, Rng* dropout_rng, Work& work) const;
  void backward(const EncodedEdit& edit, double loss_scale, Work& work);

  nn::Tensor tok_emb_;  // [V_tok x 64]
  nn::LstmCell lstm_;
  nn::Dense cls_hidden_;  // 392 -> 80 tanh
  nn::Dense cls_out_;     // 80 -> K
  int num_classes_;
  nn::TrainConfig config_;
  std::unique_ptr<Work> work_;
};

// ---------------------------------------------------------------------------
// Bag-of-words vectorizers + one-vs-rest SVMs.
// ---------------------------------------------------------------------------

enum class BowMode { Count, TfIdf };
enum class SvmKernel { Linear, Rbf };

struct DegenerateLabels : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class BowVectorizer {
 public:
  void fit(const data::Dataset& train, BowMode mode);
  // old part concatenated with new part; 2*|vocab| entries.
  std::vector<double> vectorize(const data::CodeEdit& edit) const;
  std::size_t vocab_size() const { return vocab_.size(); }
  BowMode mode() const { return mode_; }

  const std::map<std::string, int>& vocab() const { return vocab_; }
  const std::vector<double>& idf() const { return idf_; }
  void restore(BowMode mode, std::map<std::string, int> vocab, std::vector<double> idf);

 private:
  BowMode mode_ = BowMode::Count;
  std::map<std::string, int> vocab_;
  std::vector<double> idf_;
};

struct SvmConfig {
  double c = 1.0;
  double gamma = -1.0;  // <0 means 1/feature_dim
  int epochs = 50;
  int rff_dim = 512;
  std::uint64_t seed = 0;
};

// Random Fourier feature map approximating the RBF kernel
// k(x,y) = exp(-gamma * |x-y|^2).
struct RffMap {
  nn::Tensor w;  // [D x in]
  std::vector<double> b;
  double gamma = 0.0;

  void init(std::size_t in_dim, std::size_t d, double gamma_, std::uint64_t seed);
  std::vector<double> apply(std::span<const double> x) const;
};

class SvmModel {
 public:
  // One-vs-rest hinge-loss subgradient descent; lambda = 1/(C*N).
  static SvmModel train(const std::vector<std::vector<double>>& features,
                        const std::vector<int>& labels, int num_classes,
                        SvmKernel kernel, const SvmConfig& config);

  int predict(std::span<const double> features) const;
  double accuracy(const std::vector<std::vector<double>>& features,
                  const std::vector<int>& labels) const;

  SvmKernel kernel() const { return kernel_; }
  const nn::Tensor& weights() const { return w_; }
  const std::vector<double>& bias() const { return b_; }
  const RffMap& rff() const { return rff_; }
  void restore(SvmKernel kernel, nn::Tensor w, std::vector<double> b, RffMap rff);

 private:
  std::vector<double> mapped(std::span<const double> x) const;

  SvmKernel kernel_ = SvmKernel::Linear;
  nn::Tensor w_;  // [K x D]
  std::vector<double> b_;
  RffMap rff_;
};

// ---------------------------------------------------------------------------
// Uniform training/prediction interface used by cross-validation and the CLI.
// ---------------------------------------------------------------------------

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::string predict(const data::CodeEdit& edit) const = 0;
  virtual std::vector<double> predict_proba(const data::CodeEdit& edit) const = 0;
  // Pre-softmax layer output; only the neural models provide it.
  virtual std::optional<std::vector<double>> prelogits(const data::CodeEdit& edit) const {
    (void)edit;
    return std::nullopt;
  }
  virtual const std::vector<std::string>& class_labels() const = 0;
  virtual std::size_t param_count() const = 0;
  virtual void save(const std::filesystem::path& path) const = 0;
};

class ModelFamily {
 public:
  virtual ~ModelFamily() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<Classifier> fit(const data::Dataset& train,
                                          const nn::TrainConfig& config,
                                          TrainHistory* history = nullptr) const = 0;
};

// Family names: edit2vec, lstm, bow-count-linear, bow-count-rbf,
// bow-tfidf-linear, bow-tfidf-rbf.
std::unique_ptr<ModelFamily> make_family(const std::string& name);
const std::vector<std::string>& family_names();

std::unique_ptr<Classifier> load_checkpoint(const std::filesystem::path& path);

struct GradCheckCase {
  std::string name;
  nn::GradCheckReport report;
};

// Finite-difference checks for every differentiable piece plus the full
// edit2vec forward on a two-context micro-instance.
std::vector<GradCheckCase> run_gradcheck_suite(std::size_t max_checks_per_tensor = 48);

}  // namespace editvec::models
