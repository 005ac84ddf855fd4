#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "editvec/canon.hpp"
#include "editvec/checkpoint.hpp"
#include "editvec/data.hpp"
#include "editvec/minilang.hpp"
#include "editvec/models.hpp"

using namespace editvec;
using namespace editvec::models;

namespace {

nn::TrainConfig quick_config(std::uint64_t seed, int epochs = 100) {
  nn::TrainConfig config;
  config.seed = seed;
  config.epochs = epochs;
  config.batch_size = 32;
  config.stop_at_train_accuracy = 0.95;
  return config;
}

data::Dataset two_class_toy(int per_class, std::uint64_t seed) {
  data::Dataset ds;
  ds.task = data::Task::BugFix;
  Rng rng(seed);
  for (int i = 0; i < per_class; ++i) {
    auto a = data::synth_sstub("swap arguments", rng);
    a.id = "a" + std::to_string(i);
    ds.edits.push_back(std::move(a));
    auto b = data::synth_sstub("change numeral", rng);
    b.id = "b" + std::to_string(i);
    ds.edits.push_back(std::move(b));
  }
  ds.rebuild_class_index();
  return ds;
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "editvec-tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("dimension contract asserted at construction") {
  static_assert(Dims::kCpcv == 128);
  static_assert(Dims::kEditVecR == 160);
  static_assert(Dims::kLstmHidden == 196);
  static_assert(Dims::kClassifierHidden == 80);
  static_assert(Dims::kSubtokenEmb == 32);
  static_assert(Dims::kPathEmb == 128);

  nn::TrainConfig config;
  Edit2Vec model(10, 10, 3, config);
  EncodedContext ctx{{2}, {2, 3, 4}, {3}};
  CHECK(model.pce_forward(ctx).size() == 128);
  auto r = model.code_encoder_forward({model.pce_forward(ctx)}, {true});
  CHECK(r.size() == 160);
  CHECK(model.prelogits(r, r).size() == 80);

  LstmBaseline baseline(10, 3, config);
  CHECK(baseline.encode_side(std::vector<int>{2, 3, 4}).size() == 196);

  CHECK_THROWS_AS(Edit2Vec(10, 10, 1, config), nn::ConfigError);
}

TEST_CASE("pce left-context mean is the arithmetic mean of embedding rows") {
  nn::TrainConfig config;
  config.seed = 3;
  Edit2Vec model(8, 6, 2, config);
  // force rows so that row4 == (row2 + row3) / 2 exactly
  nn::Tensor* sub_emb = model.params()[0].tensor;
  REQUIRE(model.params()[0].name == "sub_emb");
  const std::size_t d = sub_emb->cols();
  for (std::size_t j = 0; j < d; ++j) {
    sub_emb->at(2, j) = 0.125 * static_cast<double>(j);
    sub_emb->at(3, j) = 0.5 - 0.25 * static_cast<double>(j);
    sub_emb->at(4, j) = (sub_emb->at(2, j) + sub_emb->at(3, j)) / 2.0;
  }
  EncodedContext pair_ctx{{2, 3}, {2, 3}, {5}};
  EncodedContext single_ctx{{4}, {2, 3}, {5}};
  CHECK(model.pce_forward(pair_ctx) == model.pce_forward(single_ctx));

  // mean of one sub-token is that row itself
  EncodedContext twice{{2, 2}, {2, 3}, {5}};
  EncodedContext once{{2}, {2, 3}, {5}};
  CHECK(model.pce_forward(twice) == model.pce_forward(once));
}

TEST_CASE("code encoder: single context passes through attention with weight 1") {
  nn::TrainConfig config;
  config.seed = 4;
  Edit2Vec model(8, 6, 2, config);
  EncodedContext ctx{{2}, {2, 3}, {3}};
  auto cpcv = model.pce_forward(ctx);
  auto r_single = model.code_encoder_forward({cpcv}, {true});
  CHECK(r_single.size() == 160);

  // padding invariance: 1 real + 39 masked garbage rows, bit identical
  std::vector<std::vector<double>> padded(40, std::vector<double>(128, 1e9));
  padded[0] = cpcv;
  std::vector<bool> mask(40, false);
  mask[0] = true;
  CHECK(model.code_encoder_forward(padded, mask) == r_single);
}

TEST_CASE("classifier probabilities sum to one; zero weights give uniform") {
  nn::TrainConfig config;
  config.seed = 5;
  Edit2Vec model(8, 6, 4, config);
  EncodedContext ctx{{2}, {2, 3}, {3}};
  auto r = model.code_encoder_forward({model.pce_forward(ctx)}, {true});
  auto probs = model.classify(r, r);
  double sum = 0.0;
  for (double p : probs) sum += p;
  CHECK(std::fabs(sum - 1.0) < 1e-9);

  for (auto& p : model.params())
    if (p.name == "cls_out.w" || p.name == "cls_out.b")
      std::fill(p.tensor->v.begin(), p.tensor->v.end(), 0.0);
  auto uniform = model.classify(r, r);
  for (double p : uniform) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("argmax of the fused training path matches the compositional path") {
  nn::TrainConfig config;
  config.seed = 6;
  auto ds = two_class_toy(10, 61);
  auto vocab_family = make_family("edit2vec");
  auto classifier = vocab_family->fit(ds, quick_config(6, 2));
  // the Classifier predict goes through the compositional inference path;
  // re-derive probabilities through predict_proba and compare argmax
  for (const auto& e : ds.edits) {
    auto proba = classifier->predict_proba(e);
    auto label = classifier->predict(e);
    std::size_t arg = static_cast<std::size_t>(
        std::max_element(proba.begin(), proba.end()) - proba.begin());
    CHECK(classifier->class_labels()[arg] == label);
  }
}

TEST_CASE("siamese symmetry: swapping sides swaps the representations") {
  nn::TrainConfig config;
  config.seed = 7;
  Edit2Vec model(40, 20, 2, config);
  EncodedContext c1{{2, 3}, {2, 3, 4}, {5}};
  EncodedContext c2{{6}, {5, 3}, {7, 8}};
  std::vector<EncodedContext> old_side = {c1, c2};
  std::vector<EncodedContext> new_side = {c2};
  CHECK(model.side_representation(old_side) == model.side_representation(old_side));
  auto r_old = model.side_representation(old_side);
  auto r_new = model.side_representation(new_side);
  // same encoder applied to both sides: swapping inputs swaps outputs exactly
  CHECK(model.side_representation(new_side) == r_new);
  CHECK(model.classify(r_old, r_new) != model.classify(r_new, r_old));

  nn::TrainConfig lstm_config;
  lstm_config.seed = 8;
  LstmBaseline baseline(30, 2, lstm_config);
  std::vector<int> seq = {2, 5, 9};
  CHECK(baseline.encode_side(seq) == baseline.encode_side(seq));
}

TEST_CASE("lstm baseline: identical sides give identical representations") {
  nn::TrainConfig config;
  config.seed = 9;
  LstmBaseline model(30, 2, config);
  EncodedEdit edit;
  edit.old_tokens = {3, 4, 5, 6};
  edit.new_tokens = {3, 4, 5, 6};
  edit.label = 0;
  auto r_old = model.encode_side(edit.old_tokens);
  auto r_new = model.encode_side(edit.new_tokens);
  CHECK(r_old == r_new);
}

TEST_CASE("single-sample training reaches accuracy 1.0") {
  data::Dataset ds;
  ds.task = data::Task::BugFix;
  Rng rng(100);
  ds.edits.push_back(data::synth_sstub("swap boolean literal", rng));
  ds.edits[0].id = "only";
  ds.rebuild_class_index();

  nn::TrainConfig config_one = quick_config(100, 30);
  // label space of two classes even though only one is populated
  std::map<std::string, int> class_index = {{"swap boolean literal", 0}, {"other", 1}};
  pathctx::Vocabulary v;
  // minimal vocab: build from this one edit
  std::vector<pathctx::EditPathContexts> encs;
  encs.push_back(pathctx::encode_edit(minilang::parse_source(ds.edits[0].old_source),
                                      minilang::parse_source(ds.edits[0].new_source)));
  std::vector<std::vector<std::string>> toks = {
      data::token_texts(ds.edits[0].old_source),
      data::token_texts(ds.edits[0].new_source)};
  v = pathctx::build_vocabulary(encs, toks, 1);

  std::vector<EncodedEdit> samples = {encode_for_models(ds.edits[0], v, class_index)};
  TrainHistory history;
  auto model = Edit2Vec::train(samples, v.subtoken_count(), v.pathlabel_count(), 2,
                               config_one, &history);
  CHECK(history.final_train_accuracy == 1.0);
}

TEST_CASE("edit2vec reaches 95% training accuracy on the two-class toy") {
  auto ds = two_class_toy(100, 7);
  REQUIRE(ds.edits.size() == 200);
  auto family = make_family("edit2vec");
  TrainHistory history;
  auto classifier = family->fit(ds, quick_config(7), &history);
  CHECK(history.final_train_accuracy >= 0.95);
  CHECK(history.epochs_run <= 100);
  // loss decreased against the first epoch
  REQUIRE(history.epoch_loss.size() >= 2);
  CHECK(history.epoch_loss.back() < history.epoch_loss.front());
}

TEST_CASE("lstm baseline reaches 95% training accuracy on the two-class toy") {
  auto ds = two_class_toy(100, 8);
  auto family = make_family("lstm");
  TrainHistory history;
  auto classifier = family->fit(ds, quick_config(8), &history);
  CHECK(history.final_train_accuracy >= 0.95);
  CHECK(history.epochs_run <= 100);
}

TEST_CASE("training rejects bad inputs") {
  data::Dataset empty;
  empty.task = data::Task::BugFix;
  auto family = make_family("edit2vec");
  CHECK_THROWS_AS(family->fit(empty, quick_config(1)), nn::ConfigError);

  nn::TrainConfig bad;
  bad.epochs = 0;
  auto ds = two_class_toy(3, 2);
  CHECK_THROWS_AS(family->fit(ds, bad), nn::ConfigError);
}

TEST_CASE("bow count vectors: counting and order invariance") {
  data::Dataset train;
  train.task = data::Task::BugFix;
  data::CodeEdit e;
  e.id = "1";
  e.old_source = "a(b)";
  e.new_source = "b(c)";
  e.label = "change numeral";
  train.edits.push_back(e);
  train.rebuild_class_index();

  BowVectorizer vec;
  vec.fit(train, BowMode::Count);
  // vocab is sorted: ( ) a b c
  REQUIRE(vec.vocab_size() == 5);
  auto x = vec.vectorize(e);
  REQUIRE(x.size() == 10);
  // old side: ( ) a b -> counts 1 1 1 1 0
  CHECK(x[0] == 1);
  CHECK(x[1] == 1);
  CHECK(x[2] == 1);
  CHECK(x[3] == 1);
  CHECK(x[4] == 0);
  // new side: b(c) -> ( ) b c
  CHECK(x[5] == 1);
  CHECK(x[6] == 1);
  CHECK(x[7] == 0);
  CHECK(x[8] == 1);
  CHECK(x[9] == 1);

  data::CodeEdit permuted = e;
  permuted.old_source = "b(a)";  // same token multiset on the old side
  auto y = vec.vectorize(permuted);
  for (std::size_t i = 0; i < 5; ++i) CHECK(x[i] == y[i]);
}

TEST_CASE("tf-idf: token present in every document has idf exactly 1") {
  data::Dataset train;
  train.task = data::Task::BugFix;
  for (int i = 0; i < 4; ++i) {
    data::CodeEdit e;
    e.id = std::to_string(i);
    e.old_source = "common(x" + std::to_string(i) + ")";
    e.new_source = "common(y" + std::to_string(i) + ")";
    e.label = "change operand";
    train.edits.push_back(e);
  }
  train.rebuild_class_index();
  BowVectorizer vec;
  vec.fit(train, BowMode::TfIdf);
  const auto& vocab = vec.vocab();
  const auto& idf = vec.idf();
  CHECK(idf[static_cast<std::size_t>(vocab.at("common"))] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(idf[static_cast<std::size_t>(vocab.at("x0"))] > 1.0);

  // vectors are L2-normalized per side
  auto x = vec.vectorize(train.edits[0]);
  double n_old = 0, n_new = 0;
  for (std::size_t i = 0; i < vec.vocab_size(); ++i) n_old += x[i] * x[i];
  for (std::size_t i = vec.vocab_size(); i < 2 * vec.vocab_size(); ++i) n_new += x[i] * x[i];
  CHECK(n_old == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(n_new == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("linear svm separates a separable 2-D toy") {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  Rng rng(222);
  for (int i = 0; i < 50; ++i) {
    x.push_back({rng.uniform(1.0, 2.0), rng.uniform(1.0, 2.0)});
    y.push_back(0);
    x.push_back({rng.uniform(-2.0, -1.0), rng.uniform(-2.0, -1.0)});
    y.push_back(1);
  }
  SvmConfig config;
  config.seed = 5;
  auto svm = SvmModel::train(x, y, 2, SvmKernel::Linear, config);
  CHECK(svm.accuracy(x, y) == 1.0);
}

TEST_CASE("svm rejects degenerate label sets") {
  std::vector<std::vector<double>> x = {{1, 0}, {1, 0}, {1, 0}};
  std::vector<int> y = {0, 0, 0};
  SvmConfig config;
  CHECK_THROWS_AS(SvmModel::train(x, y, 1, SvmKernel::Linear, config), DegenerateLabels);
  std::vector<int> y2 = {0, 0, 1};
  CHECK_THROWS_AS(SvmModel::train(x, y2, 2, SvmKernel::Linear, config), DegenerateLabels);
}

TEST_CASE("random fourier features approximate the rbf kernel") {
  const std::size_t dim = 8;
  const double gamma = 1.0 / static_cast<double>(dim);
  RffMap rff;
  rff.init(dim, 512, gamma, 77);
  Rng rng(1234);
  double total_err = 0.0;
  const int pairs = 1000;
  for (int i = 0; i < pairs; ++i) {
    std::vector<double> a(dim), b(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      a[j] = rng.uniform(-1, 1);
      b[j] = rng.uniform(-1, 1);
    }
    auto za = rff.apply(a);
    auto zb = rff.apply(b);
    double approx = nn::dot(za.data(), zb.data(), za.size());
    double d2 = 0;
    for (std::size_t j = 0; j < dim; ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
    total_err += std::fabs(approx - std::exp(-gamma * d2));
  }
  CHECK(total_err / pairs < 0.05);
}

TEST_CASE("gradient check suite passes at 1e-4") {
  for (const auto& c : models::run_gradcheck_suite()) {
    CAPTURE(c.name);
    CAPTURE(c.report.worst_param);
    CHECK(c.report.max_rel_err < 1e-4);
    CHECK(c.report.checked > 0);
  }
}

TEST_CASE("checkpoint round trip preserves predictions") {
  auto ds = two_class_toy(10, 55);
  for (const char* name : {"edit2vec", "lstm", "bow-count-linear", "bow-tfidf-rbf"}) {
    CAPTURE(name);
    auto family = make_family(name);
    auto classifier = family->fit(ds, quick_config(55, 2));
    auto path = temp_path(std::string("ckpt-") + name + ".bin");
    classifier->save(path);
    auto loaded = load_checkpoint(path);
    for (const auto& e : ds.edits) {
      CHECK(loaded->predict(e) == classifier->predict(e));
      CHECK(loaded->predict_proba(e) == classifier->predict_proba(e));
    }
  }
}

TEST_CASE("parameter counts are reported") {
  auto ds = two_class_toy(5, 66);
  auto family = make_family("lstm");
  auto classifier = family->fit(ds, quick_config(66, 1));
  CHECK(classifier->param_count() > 100000);  // LSTM cell alone has ~205k
}

TEST_CASE("canonicalized corpora still train") {
  auto ds = two_class_toy(20, 77);
  auto canon_ds = canon::canonicalize_dataset(ds);
  auto family = make_family("lstm");
  TrainHistory history;
  auto classifier = family->fit(canon_ds, quick_config(77, 30), &history);
  CHECK(history.final_train_accuracy >= 0.9);
}
