#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "editvec/data.hpp"
#include "editvec/eval.hpp"
#include "editvec/svg.hpp"
#include "editvec/tsne.hpp"
#include "support/stats_fixtures.hpp"

using namespace editvec;
using namespace editvec::eval;

namespace {

data::Dataset dummy_dataset(const std::vector<std::pair<std::string, int>>& class_counts) {
  data::Dataset ds;
  ds.task = data::Task::BugFix;
  int id = 0;
  for (const auto& [label, count] : class_counts)
    for (int i = 0; i < count; ++i) {
      data::CodeEdit e;
      e.id = "d" + std::to_string(id++);
      e.old_source = "f(1)";
      e.new_source = "f(2)";
      e.label = label;
      e.task = data::Task::BugFix;
      ds.edits.push_back(std::move(e));
    }
  ds.rebuild_class_index();
  return ds;
}

class ConstantClassifier : public models::Classifier {
 public:
  ConstantClassifier(std::string label, std::vector<std::string> classes)
      : label_(std::move(label)), classes_(std::move(classes)) {}
  std::string predict(const data::CodeEdit&) const override { return label_; }
  std::vector<double> predict_proba(const data::CodeEdit&) const override {
    return std::vector<double>(classes_.size(), 1.0 / static_cast<double>(classes_.size()));
  }
  const std::vector<std::string>& class_labels() const override { return classes_; }
  std::size_t param_count() const override { return 0; }
  void save(const std::filesystem::path&) const override {}

 private:
  std::string label_;
  std::vector<std::string> classes_;
};

class ConstantFamily : public models::ModelFamily {
 public:
  explicit ConstantFamily(std::string label) : label_(std::move(label)) {}
  std::string name() const override { return "constant"; }
  std::unique_ptr<models::Classifier> fit(const data::Dataset& train,
                                          const nn::TrainConfig&,
                                          models::TrainHistory*) const override {
    std::vector<std::string> classes;
    for (const auto& [l, _] : train.class_index) classes.push_back(l);
    return std::make_unique<ConstantClassifier>(label_, classes);
  }

 private:
  std::string label_;
};

class OracleClassifier : public models::Classifier {
 public:
  explicit OracleClassifier(std::vector<std::string> classes) : classes_(std::move(classes)) {}
  std::string predict(const data::CodeEdit& e) const override { return e.label; }
  std::vector<double> predict_proba(const data::CodeEdit&) const override {
    return std::vector<double>(classes_.size(), 0.0);
  }
  const std::vector<std::string>& class_labels() const override { return classes_; }
  std::size_t param_count() const override { return 0; }
  void save(const std::filesystem::path&) const override {}

 private:
  std::vector<std::string> classes_;
};

class OracleFamily : public models::ModelFamily {
 public:
  std::string name() const override { return "oracle"; }
  std::unique_ptr<models::Classifier> fit(const data::Dataset& train,
                                          const nn::TrainConfig&,
                                          models::TrainHistory*) const override {
    std::vector<std::string> classes;
    for (const auto& [l, _] : train.class_index) classes.push_back(l);
    return std::make_unique<OracleClassifier>(classes);
  }
};

}  // namespace

TEST_CASE("stratified folds: exact divisibility gives one per class per fold") {
  std::vector<std::pair<std::string, int>> counts;
  for (const auto& l : data::bugfix_labels()) counts.emplace_back(l, 10);
  auto ds = dummy_dataset(counts);
  REQUIRE(ds.edits.size() == 110);
  auto folds = stratified_kfold(ds, 10, 42);
  REQUIRE(folds.size() == 10);
  std::set<std::size_t> seen;
  for (const auto& fold : folds) {
    CHECK(fold.size() == 11);
    std::map<std::string, int> per_class;
    for (std::size_t i : fold) {
      ++per_class[ds.edits[i].label];
      CHECK(seen.insert(i).second);  // disjoint
    }
    for (const auto& [label, c] : per_class) CHECK(c == 1);
  }
  CHECK(seen.size() == ds.edits.size());  // partition
}

TEST_CASE("stratified folds reject classes smaller than k") {
  auto ds = dummy_dataset({{"big", 30}, {"small", 9}});
  CHECK_THROWS_AS(stratified_kfold(ds, 10, 1), ClassTooSmall);
  try {
    stratified_kfold(ds, 10, 1);
  } catch (const ClassTooSmall& e) {
    CHECK(e.label == "small");
    CHECK(e.count == 9);
  }
}

TEST_CASE("stratified folds on the full bug-template distribution stay within one") {
  // the 11 in-scope template counts; they sum to 28960
  std::vector<std::pair<std::string, int>> counts = {
      {"change caller in function call", 1488},
      {"change numeral", 4779},
      {"change operand", 741},
      {"change operator", 1711},
      {"different method same args", 9383},
      {"less specific if", 2095},
      {"more specific if", 1836},
      {"overload method deleted args", 1040},
      {"overload method more args", 3820},
      {"swap arguments", 536},
      {"swap boolean literal", 1531},
  };
  int total = 0;
  for (auto& [_, c] : counts) total += c;
  REQUIRE(total == 28960);

  auto ds = dummy_dataset(counts);
  auto folds = stratified_kfold(ds, 10, 7);
  for (const auto& [label, count] : counts) {
    const double expected = static_cast<double>(count) / 10.0;
    for (const auto& fold : folds) {
      int c = 0;
      for (std::size_t i : fold) c += ds.edits[i].label == label ? 1 : 0;
      CHECK(std::fabs(c - expected) <= 1.0);
    }
  }
}

TEST_CASE("fold construction is deterministic given the seed") {
  auto ds = dummy_dataset({{"a", 25}, {"b", 35}});
  CHECK(stratified_kfold(ds, 5, 9) == stratified_kfold(ds, 5, 9));
  CHECK(stratified_kfold(ds, 5, 9) != stratified_kfold(ds, 5, 10));
}

TEST_CASE("cross validation with dummy families") {
  std::vector<std::pair<std::string, int>> counts;
  for (const auto& l : data::bugfix_labels()) counts.emplace_back(l, 10);
  auto ds = dummy_dataset(counts);

  CrossValOptions options;
  options.runs = 3;
  options.folds = 10;
  options.seed = 5;
  nn::TrainConfig config;

  ConstantFamily constant("change numeral");
  auto eval_const = cross_validate(constant, ds, config, options);
  REQUIRE(eval_const.accuracy.size() == 3);
  for (const auto& run : eval_const.accuracy) {
    REQUIRE(run.size() == 10);
    for (double acc : run) CHECK(acc == doctest::Approx(1.0 / 11.0).epsilon(1e-12));
  }
  CHECK(eval_const.mean_accuracy == doctest::Approx(1.0 / 11.0).epsilon(1e-12));

  OracleFamily oracle;
  auto eval_oracle = cross_validate(oracle, ds, config, options);
  for (const auto& run : eval_oracle.accuracy)
    for (double acc : run) CHECK(acc == 1.0);

  // parallel jobs give identical results
  CrossValOptions parallel = options;
  parallel.jobs = 2;
  auto eval_parallel = cross_validate(oracle, ds, config, parallel);
  CHECK(eval_parallel.accuracy == eval_oracle.accuracy);
}

TEST_CASE("report arithmetic: mean equals the mean of all entries") {
  ModelEval eval;
  eval.accuracy = {{0.5, 0.7}, {0.9, 0.9}};
  eval.finalize();
  CHECK(std::fabs(eval.mean_accuracy - 0.75) < 1e-12);
}

TEST_CASE("report json round trip") {
  EvalReport report;
  report.task = "bugfix";
  report.runs = 1;
  report.folds = 2;
  ModelEval m;
  m.accuracy = {{0.25, 0.75}};
  m.finalize();
  report.models["lstm"] = m;
  report.pairwise_t_p["a|b"] = 0.125;
  auto text = report_to_json(report);
  auto back = report_from_json(text);
  CHECK(back.models.at("lstm").accuracy == m.accuracy);
  CHECK(back.pairwise_t_p.at("a|b") == 0.125);
  auto table = render_accuracy_table(report, nullptr);
  CHECK(table.find("lstm") != std::string::npos);
  CHECK(table.find("50.00%") != std::string::npos);
}

TEST_CASE("dagostino-pearson matches the frozen reference oracle") {
  std::span<const double> normal(test_fixtures::kNormal30);
  CHECK(std::fabs(dagostino_pearson(normal) - test_fixtures::kNormal30P) < 1e-6);

  std::span<const double> skewed(test_fixtures::kSkewed24);
  const double p_skew = dagostino_pearson(skewed);
  CHECK(std::fabs(p_skew - test_fixtures::kSkewed24P) < 1e-6);
  CHECK(p_skew < 0.01);

  std::vector<double> ten(10, 0.5);
  CHECK_THROWS_AS(dagostino_pearson(ten), TooFewSamples);
}

TEST_CASE("student t-test matches the frozen reference oracle") {
  std::span<const double> a(test_fixtures::kTtestA);
  std::span<const double> b(test_fixtures::kTtestB);
  CHECK(std::fabs(students_ttest(a, b) - test_fixtures::kTtestP) < 1e-6);

  std::span<const double> sa(test_fixtures::kShiftA);
  std::span<const double> sb(test_fixtures::kShiftB);
  const double p_shift = students_ttest(sa, sb);
  CHECK(std::fabs(p_shift - test_fixtures::kShiftP) < 1e-20);
  CHECK(p_shift < 1e-6);
}

TEST_CASE("identical samples give p exactly 1; degenerate variance throws") {
  std::vector<double> a = {0.9, 0.91, 0.92, 0.93};
  CHECK(students_ttest(a, a) == 1.0);

  std::vector<double> c1(5, 0.5), c2(5, 0.5);
  CHECK_THROWS_AS(students_ttest(c1, c2), DegenerateVariance);
  std::vector<double> c3(5, 0.7);
  CHECK(students_ttest(c1, c3) == 0.0);
}

TEST_CASE("t-sne separates three well-separated gaussian clusters") {
  Rng rng(99);
  std::vector<std::vector<double>> points;
  std::vector<int> labels;
  const double centers[3][4] = {
      {0, 0, 0, 0}, {10, 0, 0, 0}, {0, 10, 0, 0}};
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 50; ++i) {
      std::vector<double> p(4);
      for (int j = 0; j < 4; ++j) p[static_cast<std::size_t>(j)] = centers[c][j] + rng.normal() * 0.01;
      points.push_back(std::move(p));
      labels.push_back(c);
    }

  TsneOptions options;
  options.perplexity = 20;
  options.iterations = 500;
  options.seed = 3;
  auto projected = tsne_project(points, options);
  REQUIRE(projected.size() == points.size());

  // 1-nearest-neighbor label purity in 2-D
  int pure = 0;
  for (std::size_t i = 0; i < projected.size(); ++i) {
    double best = 1e300;
    std::size_t best_j = i;
    for (std::size_t j = 0; j < projected.size(); ++j) {
      if (j == i) continue;
      const double dx = projected[i][0] - projected[j][0];
      const double dy = projected[i][1] - projected[j][1];
      const double d = dx * dx + dy * dy;
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    pure += labels[i] == labels[best_j] ? 1 : 0;
  }
  CHECK(static_cast<double>(pure) / static_cast<double>(projected.size()) >= 0.95);
}

TEST_CASE("t-sne rejects excessive perplexity and tiny inputs") {
  std::vector<std::vector<double>> two = {{0.0, 0.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(tsne_project(two, {}), PerplexityTooLarge);
  std::vector<std::vector<double>> ten(10, std::vector<double>{0.0});
  TsneOptions options;
  options.perplexity = 3.0;  // (10-1)/3 = 3 is already too large
  CHECK_THROWS_AS(tsne_project(ten, options), PerplexityTooLarge);
}

TEST_CASE("conditional affinity rows sum to one") {
  Rng rng(17);
  const std::size_t n = 12;
  std::vector<std::vector<double>> pts(n, std::vector<double>(3));
  for (auto& p : pts)
    for (double& v : p) v = rng.uniform(-1, 1);
  std::vector<double> d2(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (int k = 0; k < 3; ++k)
        s += (pts[i][static_cast<std::size_t>(k)] - pts[j][static_cast<std::size_t>(k)]) *
             (pts[i][static_cast<std::size_t>(k)] - pts[j][static_cast<std::size_t>(k)]);
      d2[i * n + j] = s;
    }
  auto p = perplexity_affinities(d2, n, 3.0);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += p[i * n + j];
    CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p[i * n + i] == 0.0);
  }
}

TEST_CASE("svg emission is deterministic and legend-complete") {
  auto empty = scatter_svg({}, {});
  CHECK(empty.find("<svg") != std::string::npos);
  CHECK(empty.find("</svg>") != std::string::npos);

  std::vector<std::array<double, 2>> pts;
  std::vector<std::string> labels;
  Rng rng(4);
  for (const auto& l : data::bugfix_labels())
    for (int i = 0; i < 3; ++i) {
      pts.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5)});
      labels.push_back(l);
    }
  auto svg = scatter_svg(pts, labels);
  for (const auto& l : data::bugfix_labels())
    CHECK(svg.find(">" + l + "<") != std::string::npos);

  auto path1 = std::filesystem::temp_directory_path() / "editvec-tests" / "scatter1.svg";
  auto path2 = std::filesystem::temp_directory_path() / "editvec-tests" / "scatter2.svg";
  std::filesystem::create_directories(path1.parent_path());
  emit_scatter(pts, labels, path1);
  emit_scatter(pts, labels, path2);
  std::ifstream a(path1, std::ios::binary), b(path2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK(sa == svg);
}
