#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "editvec/data.hpp"
#include "editvec/models.hpp"
#include "editvec/nncore.hpp"

namespace editvec::eval {

struct ClassTooSmall : std::runtime_error {
  std::string label;
  std::size_t count;
  ClassTooSmall(std::string label_, std::size_t count_, int k)
      : std::runtime_error("class '" + label_ + "' has " + std::to_string(count_) +
                           " samples, fewer than k=" + std::to_string(k)),
        label(std::move(label_)),
        count(count_) {}
};

struct TooFewSamples : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateVariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// k disjoint folds of edit indices; per-class counts across folds differ by
// at most one. Deterministic given the seed.
std::vector<std::vector<std::size_t>> stratified_kfold(const data::Dataset& dataset,
                                                       int k, std::uint64_t seed);

struct ModelEval {
  std::vector<std::vector<double>> accuracy;        // runs x folds, held-out
  std::vector<std::vector<double>> train_accuracy;  // runs x folds
  double mean_accuracy = 0.0;
  double mean_train_accuracy = 0.0;
  double normality_p = -1.0;  // set when runs*folds >= 20

  std::vector<double> flat() const;
  void finalize();
};

struct EvalReport {
  std::string task;
  int runs = 0;
  int folds = 0;
  std::map<std::string, ModelEval> models;
  std::map<std::string, double> pairwise_t_p;  // "modelA|modelB"
};

struct CrossValOptions {
  int runs = 3;
  int folds = 10;
  std::uint64_t seed = 0;
  int jobs = 1;
};

ModelEval cross_validate(const models::ModelFamily& family, const data::Dataset& dataset,
                         const nn::TrainConfig& config, const CrossValOptions& options);

EvalReport cross_validate_many(const std::vector<std::string>& family_names,
                               const data::Dataset& dataset, const nn::TrainConfig& config,
                               const CrossValOptions& options);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

// Aligned text table: one row per model, an Accuracy column per report
// (the second, when present, is the canonicalized run).
std::string render_accuracy_table(const EvalReport& plain, const EvalReport* canon);

// D'Agostino-Pearson K^2 omnibus normality test; returns the p-value of the
// null hypothesis that the samples are normally distributed. Needs >= 20
// samples.
double dagostino_pearson(std::span<const double> samples);

// Two-sample pooled-variance Student's t-test, two-sided p-value.
double students_ttest(std::span<const double> a, std::span<const double> b);

}  // namespace editvec::eval
