#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "editvec/rng.hpp"

namespace editvec::data {

enum class Task { BugFix, CodeTransformation };

std::string_view task_name(Task t);
Task task_from_name(std::string_view name);

struct Provenance {
  enum class Kind { Imported, Synthetic } kind = Kind::Imported;
  std::uint64_t seed = 0;
};

// A labelled pair of source snippets; the unit of classification.
struct CodeEdit {
  std::string id;
  std::string old_source;
  std::string new_source;
  std::string label;
  Task task = Task::BugFix;
  Provenance provenance;
};

struct Dataset {
  std::vector<CodeEdit> edits;
  Task task = Task::BugFix;
  std::map<std::string, int> class_index;  // label -> dense index from 0

  void rebuild_class_index();
  std::size_t size() const { return edits.size(); }
};

// The 11 in-scope bug templates and the 10 analyzer tags.
const std::vector<std::string>& bugfix_labels();
const std::vector<std::string>& transformation_labels();
const std::vector<std::string>& labels_for(Task t);

struct SchemaError : std::runtime_error {
  std::size_t line;
  SchemaError(const std::string& msg, std::size_t line_)
      : std::runtime_error(msg + " (line " + std::to_string(line_) + ")"), line(line_) {}
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One record per line: {"id","old","new","label","task"}. Lossless round-trip.
Dataset load_jsonl(const std::filesystem::path& path);
void save_jsonl(const Dataset& dataset, const std::filesystem::path& path);

struct ImportConfig {
  // Upstream field names are configuration; these defaults match the
  // ManySStuBs4J JSON layout.
  std::string old_field = "sourceBeforeFix";
  std::string new_field = "sourceAfterFix";
  std::string label_field = "bugType";
  bool keep_change_caller = true;
};

struct ImportReport {
  std::map<std::string, int> excluded;  // upstream type -> dropped count
  std::size_t imported = 0;
};

// Reads a JSON array of upstream bug records and maps bug types onto the
// in-scope label set. Out-of-scope types are dropped and counted.
Dataset import_manysstubs(const std::filesystem::path& path, const ImportConfig& config,
                          ImportReport* report = nullptr);

struct FilterReport {
  std::map<std::string, int> dropped;  // reason -> count
  std::size_t kept = 0;
};

// Drops edits that fail tokenize/parse on either side or exceed the
// path-context budget on either side.
std::pair<Dataset, FilterReport> filter_pipeline(const Dataset& dataset,
                                                 int max_contexts = 40);

struct SynthOptions {
  // Draw identifiers from a per-class slice of the pool, so raw identifier
  // names carry label signal (and canonicalization removes it).
  bool class_specific_identifiers = false;
};

CodeEdit synth_sstub(const std::string& bug_template, Rng& rng,
                     const SynthOptions& options = {});
CodeEdit synth_transformation(const std::string& analyzer, Rng& rng,
                              const SynthOptions& options = {});

// Balanced, deduplicated, deterministic corpus of per_class edits per label.
Dataset make_synthetic_corpus(Task task, int per_class, std::uint64_t seed,
                              const SynthOptions& options = {});

// Golden path-context fixture format: one JSONL record per edit with
// {id,label,old_contexts,new_contexts}, each context a 3-array
// [left_subtokens, path_labels, right_subtokens].
void save_context_fixtures(const Dataset& dataset, const std::filesystem::path& path,
                           int max_contexts = 40);

// Token texts of one source snippet (LexError propagates).
std::vector<std::string> token_texts(const std::string& source);

}  // namespace editvec::data
