#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "editvec/canon.hpp"
#include "editvec/checkpoint.hpp"
#include "editvec/config_io.hpp"
#include "editvec/data.hpp"
#include "editvec/eval.hpp"
#include "editvec/models.hpp"
#include "editvec/svg.hpp"
#include "editvec/tsne.hpp"

using nlohmann::json;
using namespace editvec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::uint64_t env_seed_default() {
  const char* env = std::getenv("EDITVEC_SEED");
  if (!env) return 0;
  return std::strtoull(env, nullptr, 10);
}

void log_config(const std::string& subcommand, const json& resolved) {
  std::cerr << "[" << subcommand << "] resolved config: " << resolved.dump() << "\n";
}

nn::TrainConfig load_train_config(const std::string& config_path) {
  nn::TrainConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw data::IoError("cannot open config " + config_path);
    json j = json::parse(in);
    config = j.get<nn::TrainConfig>();
  }
  return config;
}

struct TrainFlags {
  std::string config_path;
  int epochs = -1;
  int batch_size = -1;
  double learning_rate = -1.0;
  std::int64_t seed = -1;
  double stop_at = -2.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (flags win over file)");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--batch-size", batch_size, "minibatch size");
    cmd->add_option("--learning-rate", learning_rate, "Adam learning rate");
    cmd->add_option("--seed", seed, "training seed (default: EDITVEC_SEED or 0)");
    cmd->add_option("--stop-at-train-acc", stop_at,
                    "stop early once training accuracy reaches this value");
  }

  nn::TrainConfig resolve() const {
    nn::TrainConfig config = load_train_config(config_path);
    if (epochs >= 0) config.epochs = epochs;
    if (batch_size >= 0) config.batch_size = batch_size;
    if (learning_rate >= 0.0) config.learning_rate = learning_rate;
    if (seed >= 0)
      config.seed = static_cast<std::uint64_t>(seed);
    else if (config_path.empty())
      config.seed = env_seed_default();
    if (stop_at >= -1.0) config.stop_at_train_accuracy = stop_at;
    return config;
  }
};

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t comma = csv.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(csv.substr(start));
      break;
    }
    out.push_back(csv.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"code-edit classification laboratory"};
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a balanced synthetic edit corpus");
  std::string synth_task;
  int synth_per_class = 10;
  std::int64_t synth_seed = -1;
  std::string synth_out;
  bool synth_leak = false;
  synth->add_option("task", synth_task, "bugfix | transformation")->required();
  synth->add_option("--per-class", synth_per_class, "edits per label");
  synth->add_option("--seed", synth_seed, "corpus seed");
  synth->add_option("--out", synth_out, "output JSONL path")->required();
  synth->add_flag("--leak-identifiers", synth_leak,
                  "draw identifiers from per-class pools");
  synth->callback([&] {
    std::uint64_t seed =
        synth_seed >= 0 ? static_cast<std::uint64_t>(synth_seed) : env_seed_default();
    data::SynthOptions options;
    options.class_specific_identifiers = synth_leak;
    log_config("synth", {{"task", synth_task},
                         {"per_class", synth_per_class},
                         {"seed", seed},
                         {"leak_identifiers", synth_leak}});
    auto ds = data::make_synthetic_corpus(data::task_from_name(synth_task),
                                          synth_per_class, seed, options);
    data::save_jsonl(ds, synth_out);
    std::cout << "wrote " << ds.edits.size() << " edits to " << synth_out << "\n";
  });

  // --- import ----------------------------------------------------------------
  auto* import_cmd = app.add_subcommand("import", "import an upstream bug-fix corpus");
  std::string import_in, import_out, import_format = "manysstubs", import_field_map;
  bool drop_change_caller = false;
  import_cmd->add_option("--in", import_in, "upstream JSON array")->required();
  import_cmd->add_option("--format", import_format, "input format (manysstubs)");
  import_cmd->add_option("--field-map", import_field_map,
                         "JSON object naming old/new/label fields");
  import_cmd->add_flag("--drop-change-caller", drop_change_caller,
                       "drop 'change caller in function call' records");
  import_cmd->add_option("--out", import_out, "output JSONL path")->required();
  import_cmd->callback([&] {
    if (import_format != "manysstubs")
      throw std::invalid_argument("unknown import format: " + import_format);
    data::ImportConfig config;
    config.keep_change_caller = !drop_change_caller;
    if (!import_field_map.empty()) {
      json j = json::parse(import_field_map);
      config.old_field = j.value("old", config.old_field);
      config.new_field = j.value("new", config.new_field);
      config.label_field = j.value("label", config.label_field);
    }
    log_config("import", {{"format", import_format},
                          {"old_field", config.old_field},
                          {"new_field", config.new_field},
                          {"label_field", config.label_field},
                          {"keep_change_caller", config.keep_change_caller}});
    data::ImportReport report;
    auto ds = data::import_manysstubs(import_in, config, &report);
    data::save_jsonl(ds, import_out);
    json rj;
    rj["imported"] = report.imported;
    rj["excluded"] = report.excluded;
    std::cout << rj.dump(2) << "\n";
  });

  // --- filter ----------------------------------------------------------------
  auto* filter_cmd = app.add_subcommand("filter", "apply the filtering pipeline");
  std::string filter_in, filter_out, filter_report;
  int filter_max = 40;
  filter_cmd->add_option("--in", filter_in, "input JSONL")->required();
  filter_cmd->add_option("--out", filter_out, "output JSONL")->required();
  filter_cmd->add_option("--max-contexts", filter_max, "path-context budget per side");
  filter_cmd->add_option("--report", filter_report, "write drop counts as JSON");
  filter_cmd->callback([&] {
    log_config("filter", {{"max_contexts", filter_max}});
    auto ds = data::load_jsonl(filter_in);
    auto [kept, report] = data::filter_pipeline(ds, filter_max);
    data::save_jsonl(kept, filter_out);
    json rj;
    rj["kept"] = report.kept;
    rj["dropped"] = report.dropped;
    if (!filter_report.empty()) {
      std::ofstream out(filter_report, std::ios::binary);
      out << rj.dump(2) << "\n";
    }
    std::cout << rj.dump(2) << "\n";
  });

  // --- canon -----------------------------------------------------------------
  auto* canon_cmd = app.add_subcommand("canon", "canonicalize identifiers and literals");
  std::string canon_in, canon_out;
  canon_cmd->add_option("--in", canon_in, "input JSONL")->required();
  canon_cmd->add_option("--out", canon_out, "output JSONL")->required();
  canon_cmd->callback([&] {
    log_config("canon", json::object());
    auto ds = data::load_jsonl(canon_in);
    data::save_jsonl(canon::canonicalize_dataset(ds), canon_out);
    std::cout << "canonicalized " << ds.edits.size() << " edits\n";
  });

  // --- extract ----------------------------------------------------------------
  auto* extract_cmd =
      app.add_subcommand("extract", "emit path-context fixtures for a dataset");
  std::string extract_in, extract_out;
  int extract_max = 40;
  extract_cmd->add_option("--in", extract_in, "input JSONL")->required();
  extract_cmd->add_option("--out", extract_out, "fixture JSONL")->required();
  extract_cmd->add_option("--max-contexts", extract_max, "path-context budget per side");
  extract_cmd->callback([&] {
    log_config("extract", {{"max_contexts", extract_max}});
    auto ds = data::load_jsonl(extract_in);
    data::save_context_fixtures(ds, extract_out, extract_max);
    std::cout << "wrote fixtures for " << ds.edits.size() << " edits\n";
  });

  // --- train -----------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train one model on a dataset");
  std::string train_model, train_data, train_checkpoint;
  TrainFlags train_flags;
  train_cmd->add_option("--model", train_model, "edit2vec | lstm | bow-*")->required();
  train_cmd->add_option("--data", train_data, "training JSONL")->required();
  train_cmd->add_option("--out-checkpoint", train_checkpoint, "checkpoint path");
  train_flags.attach(train_cmd);
  train_cmd->callback([&] {
    nn::TrainConfig config = train_flags.resolve();
    json resolved = config;
    resolved["model"] = train_model;
    log_config("train", resolved);
    auto ds = data::load_jsonl(train_data);
    auto family = models::make_family(train_model);
    models::TrainHistory history;
    auto classifier = family->fit(ds, config, &history);
    std::cerr << "[train] parameters: " << classifier->param_count() << "\n";
    json out;
    out["model"] = train_model;
    out["train_accuracy"] = history.final_train_accuracy;
    out["epochs_run"] = history.epochs_run;
    out["param_count"] = classifier->param_count();
    if (!history.epoch_loss.empty()) out["final_loss"] = history.epoch_loss.back();
    if (!train_checkpoint.empty()) {
      classifier->save(train_checkpoint);
      out["checkpoint"] = train_checkpoint;
    }
    std::cout << out.dump(2) << "\n";
  });

  // --- predict ----------------------------------------------------------------
  auto* predict_cmd = app.add_subcommand("predict", "classify edits with a checkpoint");
  std::string predict_checkpoint, predict_data, predict_out;
  predict_cmd->add_option("--checkpoint", predict_checkpoint, "model checkpoint")
      ->required();
  predict_cmd->add_option("--data", predict_data, "input JSONL")->required();
  predict_cmd->add_option("--out", predict_out, "output JSONL")->required();
  predict_cmd->callback([&] {
    log_config("predict", {{"checkpoint", predict_checkpoint}});
    auto classifier = models::load_checkpoint(predict_checkpoint);
    auto ds = data::load_jsonl(predict_data);
    std::ofstream out(predict_out, std::ios::binary);
    if (!out) throw data::IoError("cannot open " + predict_out + " for writing");
    std::size_t hits = 0, total = 0;
    for (const auto& e : ds.edits) {
      json j;
      j["id"] = e.id;
      j["predicted_label"] = classifier->predict(e);
      j["probabilities"] = classifier->predict_proba(e);
      out << j.dump() << "\n";
      ++total;
      if (j["predicted_label"] == e.label) ++hits;
    }
    std::cout << "accuracy " << (total ? static_cast<double>(hits) / total : 0.0) << " on "
              << total << " edits\n";
  });

  // --- crossval ----------------------------------------------------------------
  auto* crossval_cmd =
      app.add_subcommand("crossval", "stratified repeated cross-validation");
  std::string cv_data, cv_canon_data, cv_models = "lstm", cv_out, cv_canon_out;
  int cv_runs = 3, cv_folds = 10, cv_jobs = 1;
  std::int64_t cv_seed = -1;
  TrainFlags cv_flags;
  crossval_cmd->add_option("--data", cv_data, "dataset JSONL")->required();
  crossval_cmd->add_option("--canon-data", cv_canon_data,
                           "canonicalized dataset for the second table column");
  crossval_cmd->add_option("--models", cv_models, "comma-separated model families");
  crossval_cmd->add_option("--runs", cv_runs, "repeated runs");
  crossval_cmd->add_option("--folds", cv_folds, "folds per run");
  crossval_cmd->add_option("--jobs", cv_jobs, "parallel fold jobs");
  crossval_cmd->add_option("--cv-seed", cv_seed, "fold/shuffle seed");
  crossval_cmd->add_option("--out", cv_out, "write the EvalReport JSON here");
  crossval_cmd->add_option("--canon-out", cv_canon_out,
                           "write the canonicalized-run report here");
  cv_flags.attach(crossval_cmd);
  crossval_cmd->callback([&] {
    nn::TrainConfig config = cv_flags.resolve();
    eval::CrossValOptions options;
    options.runs = cv_runs;
    options.folds = cv_folds;
    options.jobs = cv_jobs;
    options.seed = cv_seed >= 0 ? static_cast<std::uint64_t>(cv_seed) : config.seed;
    json resolved = config;
    resolved["models"] = cv_models;
    resolved["runs"] = cv_runs;
    resolved["folds"] = cv_folds;
    resolved["cv_seed"] = options.seed;
    resolved["jobs"] = cv_jobs;
    log_config("crossval", resolved);

    auto names = split_csv(cv_models);
    auto ds = data::load_jsonl(cv_data);
    auto report = eval::cross_validate_many(names, ds, config, options);
    if (!cv_out.empty()) {
      std::ofstream out(cv_out, std::ios::binary);
      out << eval::report_to_json(report) << "\n";
    }
    std::optional<eval::EvalReport> canon_report;
    if (!cv_canon_data.empty()) {
      auto canon_ds = data::load_jsonl(cv_canon_data);
      canon_report = eval::cross_validate_many(names, canon_ds, config, options);
      if (!cv_canon_out.empty()) {
        std::ofstream out(cv_canon_out, std::ios::binary);
        out << eval::report_to_json(*canon_report) << "\n";
      }
    }
    std::cout << eval::render_accuracy_table(report,
                                             canon_report ? &*canon_report : nullptr);
    for (const auto& [pair, p] : report.pairwise_t_p)
      std::cout << "t-test " << pair << ": p = " << p << "\n";
  });

  // --- stats -----------------------------------------------------------------
  auto* stats_cmd =
      app.add_subcommand("stats", "normality and t-test between two report entries");
  std::string stats_report_a, stats_report_b, stats_model_a, stats_model_b;
  stats_cmd->add_option("--report-a", stats_report_a, "EvalReport JSON")->required();
  stats_cmd->add_option("--model-a", stats_model_a, "model name inside report A")
      ->required();
  stats_cmd->add_option("--report-b", stats_report_b, "EvalReport JSON (default: A)");
  stats_cmd->add_option("--model-b", stats_model_b, "model name inside report B")
      ->required();
  stats_cmd->callback([&] {
    log_config("stats", json::object());
    auto load = [](const std::string& path) {
      std::ifstream in(path);
      if (!in) throw data::IoError("cannot open " + path);
      std::string text((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
      return eval::report_from_json(text);
    };
    auto report_a = load(stats_report_a);
    auto report_b = stats_report_b.empty() ? report_a : load(stats_report_b);
    if (!report_a.models.count(stats_model_a))
      throw std::invalid_argument("report A has no model " + stats_model_a);
    if (!report_b.models.count(stats_model_b))
      throw std::invalid_argument("report B has no model " + stats_model_b);
    auto a = report_a.models.at(stats_model_a).flat();
    auto b = report_b.models.at(stats_model_b).flat();
    json out;
    out["normality_p"][stats_model_a] = eval::dagostino_pearson(a);
    out["normality_p"][stats_model_b] = eval::dagostino_pearson(b);
    out["t_test_p"] = eval::students_ttest(a, b);
    std::cout << out.dump(2) << "\n";
  });

  // --- project ----------------------------------------------------------------
  auto* project_cmd =
      app.add_subcommand("project", "2-D t-SNE projection of pre-softmax outputs");
  std::string proj_checkpoint, proj_data, proj_layer = "prelogits", proj_svg, proj_points;
  double proj_perplexity = 30.0;
  int proj_iterations = 1000;
  std::int64_t proj_seed = -1;
  project_cmd->add_option("--checkpoint", proj_checkpoint, "neural checkpoint")
      ->required();
  project_cmd->add_option("--data", proj_data, "dataset JSONL")->required();
  project_cmd->add_option("--layer", proj_layer, "layer to project (prelogits)");
  project_cmd->add_option("--perplexity", proj_perplexity, "t-SNE perplexity");
  project_cmd->add_option("--iterations", proj_iterations, "t-SNE iterations");
  project_cmd->add_option("--seed", proj_seed, "t-SNE seed");
  project_cmd->add_option("--out-svg", proj_svg, "scatter SVG path")->required();
  project_cmd->add_option("--out-points", proj_points, "points JSON path");
  project_cmd->callback([&] {
    if (proj_layer != "prelogits")
      throw std::invalid_argument("unknown layer: " + proj_layer);
    eval::TsneOptions options;
    options.perplexity = proj_perplexity;
    options.iterations = proj_iterations;
    options.seed = proj_seed >= 0 ? static_cast<std::uint64_t>(proj_seed) : env_seed_default();
    log_config("project", {{"layer", proj_layer},
                           {"perplexity", options.perplexity},
                           {"iterations", options.iterations},
                           {"seed", options.seed}});
    auto classifier = models::load_checkpoint(proj_checkpoint);
    auto ds = data::load_jsonl(proj_data);
    std::vector<std::vector<double>> vectors;
    std::vector<std::string> labels;
    for (const auto& e : ds.edits) {
      auto pre = classifier->prelogits(e);
      if (!pre)
        throw std::invalid_argument("checkpoint model has no pre-softmax layer");
      vectors.push_back(std::move(*pre));
      labels.push_back(e.label);
    }
    auto points = eval::tsne_project(vectors, options);
    eval::emit_scatter(points, labels, proj_svg);
    if (!proj_points.empty()) {
      json pts = json::array();
      for (std::size_t i = 0; i < points.size(); ++i)
        pts.push_back({{"x", points[i][0]}, {"y", points[i][1]}, {"label", labels[i]}});
      std::ofstream out(proj_points, std::ios::binary);
      out << pts.dump(2) << "\n";
    }
    std::cout << "projected " << points.size() << " edits\n";
  });

  // --- gradcheck ----------------------------------------------------------------
  auto* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference checks of every layer");
  double gc_tolerance = 1e-4;
  gradcheck_cmd->add_option("--tolerance", gc_tolerance, "max relative error");
  gradcheck_cmd->callback([&] {
    log_config("gradcheck", {{"tolerance", gc_tolerance}});
    bool all_ok = true;
    for (const auto& c : models::run_gradcheck_suite()) {
      const bool ok = c.report.passed(gc_tolerance);
      all_ok = all_ok && ok;
      std::cout << (ok ? "[PASS] " : "[FAIL] ") << c.name
                << " max_rel_err=" << c.report.max_rel_err << " (" << c.report.checked
                << " elements, worst " << c.report.worst_param << ")\n";
    }
    if (!all_ok) throw eval::DegenerateVariance("gradient check tolerance exceeded");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const eval::DegenerateVariance& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const eval::TooFewSamples& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
