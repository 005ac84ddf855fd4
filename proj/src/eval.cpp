#include "editvec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

using nlohmann::json;

namespace editvec::eval {

std::vector<std::vector<std::size_t>> stratified_kfold(const data::Dataset& dataset,
                                                       int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.edits.size(); ++i)
    by_class[dataset.edits[i].label].push_back(i);

  for (const auto& [label, idx] : by_class)
    if (idx.size() < static_cast<std::size_t>(k))
      throw ClassTooSmall(label, idx.size(), k);

  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  Rng rng(seed);
  std::size_t class_ordinal = 0;
  for (auto& [label, idx] : by_class) {
    rng.shuffle(idx);
    // rotate the starting fold per class so remainders spread evenly
    const std::size_t offset = class_ordinal % static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < idx.size(); ++i)
      folds[(offset + i) % static_cast<std::size_t>(k)].push_back(idx[i]);
    ++class_ordinal;
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<double> ModelEval::flat() const {
  std::vector<double> out;
  for (const auto& run : accuracy)
    for (double a : run) out.push_back(a);
  return out;
}

void ModelEval::finalize() {
  auto values = flat();
  mean_accuracy =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  normality_p = values.size() >= 20 ? dagostino_pearson(values) : -1.0;
  double train_sum = 0.0;
  std::size_t train_n = 0;
  for (const auto& run : train_accuracy)
    for (double a : run) {
      train_sum += a;
      ++train_n;
    }
  mean_train_accuracy = train_n ? train_sum / static_cast<double>(train_n) : 0.0;
}

namespace {

// Minimal deterministic work pool: tasks are indexed, results land in
// pre-assigned slots, so scheduling order never affects output.
void run_jobs(std::size_t task_count, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || task_count <= 1) {
    for (std::size_t i = 0; i < task_count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  const int n_workers = std::min<int>(jobs, static_cast<int>(task_count));
  for (int w = 0; w < n_workers; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= task_count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

ModelEval cross_validate(const models::ModelFamily& family, const data::Dataset& dataset,
                         const nn::TrainConfig& config, const CrossValOptions& options) {
  ModelEval eval;
  eval.accuracy.assign(static_cast<std::size_t>(options.runs),
                       std::vector<double>(static_cast<std::size_t>(options.folds), 0.0));
  eval.train_accuracy.assign(
      static_cast<std::size_t>(options.runs),
      std::vector<double>(static_cast<std::size_t>(options.folds), 0.0));

  // Folds are reshuffled per run with seed+run.
  std::vector<std::vector<std::vector<std::size_t>>> run_folds;
  for (int run = 0; run < options.runs; ++run)
    run_folds.push_back(
        stratified_kfold(dataset, options.folds, options.seed + static_cast<std::uint64_t>(run)));

  const std::size_t tasks = static_cast<std::size_t>(options.runs) *
                            static_cast<std::size_t>(options.folds);
  run_jobs(tasks, options.jobs, [&](std::size_t task) {
    const int run = static_cast<int>(task) / options.folds;
    const int fold = static_cast<int>(task) % options.folds;
    const auto& folds = run_folds[static_cast<std::size_t>(run)];

    data::Dataset train;
    train.task = dataset.task;
    for (int f = 0; f < options.folds; ++f) {
      if (f == fold) continue;
      for (std::size_t i : folds[static_cast<std::size_t>(f)])
        train.edits.push_back(dataset.edits[i]);
    }
    train.rebuild_class_index();

    nn::TrainConfig fold_config = config;
    fold_config.seed = options.seed + static_cast<std::uint64_t>(run);

    models::TrainHistory history;
    auto classifier = family.fit(train, fold_config, &history);
    eval.train_accuracy[static_cast<std::size_t>(run)][static_cast<std::size_t>(fold)] =
        history.final_train_accuracy;

    const auto& test_idx = folds[static_cast<std::size_t>(fold)];
    std::size_t hits = 0;
    for (std::size_t i : test_idx)
      if (classifier->predict(dataset.edits[i]) == dataset.edits[i].label) ++hits;
    eval.accuracy[static_cast<std::size_t>(run)][static_cast<std::size_t>(fold)] =
        static_cast<double>(hits) / static_cast<double>(test_idx.size());
  });

  eval.finalize();
  return eval;
}

EvalReport cross_validate_many(const std::vector<std::string>& family_names,
                               const data::Dataset& dataset, const nn::TrainConfig& config,
                               const CrossValOptions& options) {
  EvalReport report;
  report.task = std::string(data::task_name(dataset.task));
  report.runs = options.runs;
  report.folds = options.folds;
  for (const auto& name : family_names) {
    auto family = models::make_family(name);
    report.models[name] = cross_validate(*family, dataset, config, options);
  }
  for (auto a = report.models.begin(); a != report.models.end(); ++a)
    for (auto b = std::next(a); b != report.models.end(); ++b)
      report.pairwise_t_p[a->first + "|" + b->first] =
          students_ttest(a->second.flat(), b->second.flat());
  return report;
}

std::string report_to_json(const EvalReport& report) {
  json j;
  j["task"] = report.task;
  j["runs"] = report.runs;
  j["folds"] = report.folds;
  for (const auto& [name, eval] : report.models) {
    json m;
    m["accuracy"] = eval.accuracy;
    m["train_accuracy"] = eval.train_accuracy;
    m["mean_accuracy"] = eval.mean_accuracy;
    m["mean_train_accuracy"] = eval.mean_train_accuracy;
    m["normality_p"] = eval.normality_p;
    j["models"][name] = m;
  }
  j["pairwise_t_p"] = report.pairwise_t_p;
  return j.dump(2);
}

EvalReport report_from_json(const std::string& text) {
  json j = json::parse(text);
  EvalReport report;
  report.task = j.value("task", "");
  report.runs = j.value("runs", 0);
  report.folds = j.value("folds", 0);
  if (j.contains("models"))
    for (auto it = j["models"].begin(); it != j["models"].end(); ++it) {
      ModelEval m;
      m.accuracy = it.value()["accuracy"].get<std::vector<std::vector<double>>>();
      if (it.value().contains("train_accuracy"))
        m.train_accuracy =
            it.value()["train_accuracy"].get<std::vector<std::vector<double>>>();
      m.mean_accuracy = it.value().value("mean_accuracy", 0.0);
      m.mean_train_accuracy = it.value().value("mean_train_accuracy", 0.0);
      m.normality_p = it.value().value("normality_p", -1.0);
      report.models[it.key()] = std::move(m);
    }
  if (j.contains("pairwise_t_p"))
    report.pairwise_t_p = j["pairwise_t_p"].get<std::map<std::string, double>>();
  return report;
}

std::string render_accuracy_table(const EvalReport& plain, const EvalReport* canon) {
  std::size_t width = 5;
  for (const auto& [name, _] : plain.models) width = std::max(width, name.size());
  std::ostringstream out;
  out << std::left;
  out.width(static_cast<std::streamsize>(width + 2));
  out << "Model";
  out << "Accuracy";
  if (canon) out << "    Accuracy (Canon.)";
  out << "\n";
  char buf[64];
  for (const auto& [name, eval] : plain.models) {
    out.width(static_cast<std::streamsize>(width + 2));
    out << name;
    std::snprintf(buf, sizeof(buf), "%6.2f%%", eval.mean_accuracy * 100.0);
    out << buf;
    if (canon) {
      auto it = canon->models.find(name);
      if (it != canon->models.end()) {
        std::snprintf(buf, sizeof(buf), "    %6.2f%%", it->second.mean_accuracy * 100.0);
        out << buf;
      }
    }
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Statistical tests
// ---------------------------------------------------------------------------

namespace {

struct Moments {
  double mean = 0, m2 = 0, m3 = 0, m4 = 0;
};

Moments central_moments(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= n;
  for (double v : x) {
    const double d = v - m.mean;
    m.m2 += d * d;
    m.m3 += d * d * d;
    m.m4 += d * d * d * d;
  }
  m.m2 /= n;
  m.m3 /= n;
  m.m4 /= n;
  return m;
}

double skewtest_z(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  Moments m = central_moments(x);
  const double g1 = m.m3 / std::pow(m.m2, 1.5);
  double y = g1 * std::sqrt(((n + 1.0) * (n + 3.0)) / (6.0 * (n - 2.0)));
  const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                       ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
  const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
  const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
  const double alpha = std::sqrt(2.0 / (w2 - 1.0));
  if (y == 0.0) y = 1.0;
  return delta * std::log(y / alpha + std::sqrt((y / alpha) * (y / alpha) + 1.0));
}

double kurtosistest_z(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  Moments m = central_moments(x);
  const double b2 = m.m4 / (m.m2 * m.m2);
  const double e = 3.0 * (n - 1.0) / (n + 1.0);
  const double var_b2 =
      24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
  const double xs = (b2 - e) / std::sqrt(var_b2);
  const double sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                            std::sqrt(6.0 * (n + 3.0) * (n + 5.0) /
                                      (n * (n - 2.0) * (n - 3.0)));
  const double a =
      6.0 + 8.0 / sqrt_beta1 *
                (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
  const double term1 = 1.0 - 2.0 / (9.0 * a);
  const double denom = 1.0 + xs * std::sqrt(2.0 / (a - 4.0));
  const double term2 = (denom < 0.0 ? -1.0 : 1.0) *
                       std::cbrt((1.0 - 2.0 / a) / std::fabs(denom));
  return (term1 - term2) / std::sqrt(2.0 / (9.0 * a));
}

// Regularized incomplete beta via Lentz continued fraction.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double betainc(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log(1.0 - x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double dagostino_pearson(std::span<const double> samples) {
  if (samples.size() < 20)
    throw TooFewSamples("D'Agostino-Pearson needs at least 20 samples, got " +
                        std::to_string(samples.size()));
  const double z1 = skewtest_z(samples);
  const double z2 = kurtosistest_z(samples);
  const double k2 = z1 * z1 + z2 * z2;
  return std::exp(-k2 / 2.0);  // chi-squared(2) survival function
}

double students_ttest(std::span<const double> a, std::span<const double> b) {
  const std::size_t na = a.size(), nb = b.size();
  if (na < 2 || nb < 2) throw TooFewSamples("t-test needs at least 2 samples per side");
  double ma = 0, mb = 0;
  for (double v : a) ma += v;
  for (double v : b) mb += v;
  ma /= static_cast<double>(na);
  mb /= static_cast<double>(nb);
  double va = 0, vb = 0;
  for (double v : a) va += (v - ma) * (v - ma);
  for (double v : b) vb += (v - mb) * (v - mb);
  va /= static_cast<double>(na - 1);
  vb /= static_cast<double>(nb - 1);

  const double df = static_cast<double>(na + nb - 2);
  const double sp2 = (static_cast<double>(na - 1) * va + static_cast<double>(nb - 1) * vb) / df;
  if (sp2 == 0.0) {
    if (ma == mb)
      throw DegenerateVariance("both samples are constant and equal");
    return 0.0;
  }
  const double t = (ma - mb) / std::sqrt(sp2 * (1.0 / static_cast<double>(na) +
                                                1.0 / static_cast<double>(nb)));
  if (t == 0.0) return 1.0;
  return betainc(df / 2.0, 0.5, df / (df + t * t));
}

}  // namespace editvec::eval
