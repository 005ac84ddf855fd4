#include "editvec/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>

#include <json.hpp>

#include "editvec/minilang.hpp"
#include "editvec/pathctx.hpp"

namespace editvec::data {

using minilang::AstNode;
using minilang::NodeKind;
using nlohmann::json;

std::string_view task_name(Task t) {
  return t == Task::BugFix ? "bugfix" : "transformation";
}

Task task_from_name(std::string_view name) {
  if (name == "bugfix") return Task::BugFix;
  if (name == "transformation") return Task::CodeTransformation;
  throw std::invalid_argument("unknown task: " + std::string(name));
}

void Dataset::rebuild_class_index() {
  class_index.clear();
  std::set<std::string> labels;
  for (const auto& e : edits) labels.insert(e.label);
  int next = 0;
  for (const auto& l : labels) class_index.emplace(l, next++);
}

const std::vector<std::string>& bugfix_labels() {
  static const std::vector<std::string> labels = {
      "change caller in function call",
      "change numeral",
      "change operand",
      "change operator",
      "different method same args",
      "less specific if",
      "more specific if",
      "overload method deleted args",
      "overload method more args",
      "swap arguments",
      "swap boolean literal",
  };
  return labels;
}

const std::vector<std::string>& transformation_labels() {
  static const std::vector<std::string> labels = {
      "RCS1001", "RCS1032", "RCS1049", "RCS1085", "RCS1123",
      "RCS1124", "RCS1146", "RCS1163", "RCS1168", "RCS1220",
  };
  return labels;
}

const std::vector<std::string>& labels_for(Task t) {
  return t == Task::BugFix ? bugfix_labels() : transformation_labels();
}

std::vector<std::string> token_texts(const std::string& source) {
  std::vector<std::string> out;
  for (const auto& t : minilang::tokenize(source)) out.push_back(t.text);
  return out;
}

// ---------------------------------------------------------------------------
// JSONL persistence
// ---------------------------------------------------------------------------

Dataset load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Dataset ds;
  bool task_set = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw SchemaError("invalid JSON", line_no);
    for (const char* field : {"id", "old", "new", "label", "task"})
      if (!j.contains(field) || !j[field].is_string())
        throw SchemaError(std::string("missing or non-string field \"") + field + "\"",
                          line_no);
    CodeEdit e;
    e.id = j["id"].get<std::string>();
    e.old_source = j["old"].get<std::string>();
    e.new_source = j["new"].get<std::string>();
    e.label = j["label"].get<std::string>();
    try {
      e.task = task_from_name(j["task"].get<std::string>());
    } catch (const std::invalid_argument&) {
      throw SchemaError("unknown task value", line_no);
    }
    if (!task_set) {
      ds.task = e.task;
      task_set = true;
    } else if (e.task != ds.task) {
      throw SchemaError("mixed tasks in one dataset", line_no);
    }
    ds.edits.push_back(std::move(e));
  }
  ds.rebuild_class_index();
  return ds;
}

void save_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& e : dataset.edits) {
    json j;
    j["id"] = e.id;
    j["old"] = e.old_source;
    j["new"] = e.new_source;
    j["label"] = e.label;
    j["task"] = std::string(task_name(e.task));
    out << j.dump() << "\n";
  }
}

// ---------------------------------------------------------------------------
// ManySStuBs4J importer
// ---------------------------------------------------------------------------

namespace {

std::string normalize_bug_type(std::string s) {
  for (char& c : s) {
    if (c == '_') c = ' ';
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s;
}

}  // namespace

Dataset import_manysstubs(const std::filesystem::path& path, const ImportConfig& config,
                          ImportReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  json root = json::parse(in, nullptr, false);
  if (root.is_discarded() || !root.is_array())
    throw SchemaError("expected a JSON array of bug records", 0);

  const auto& in_scope = bugfix_labels();
  Dataset ds;
  ds.task = Task::BugFix;
  ImportReport local;
  std::size_t index = 0;
  for (const auto& rec : root) {
    ++index;
    for (const std::string* field :
         {&config.old_field, &config.new_field, &config.label_field})
      if (!rec.contains(*field) || !rec[*field].is_string())
        throw SchemaError("record missing field \"" + *field + "\"", index);
    std::string upstream_type = rec[config.label_field].get<std::string>();
    std::string label = normalize_bug_type(upstream_type);
    bool keep = std::find(in_scope.begin(), in_scope.end(), label) != in_scope.end();
    if (label == "change caller in function call" && !config.keep_change_caller)
      keep = false;
    if (!keep) {
      ++local.excluded[upstream_type];
      continue;
    }
    CodeEdit e;
    e.id = "import-" + std::to_string(index);
    e.old_source = rec[config.old_field].get<std::string>();
    e.new_source = rec[config.new_field].get<std::string>();
    e.label = std::move(label);
    e.task = Task::BugFix;
    e.provenance = {Provenance::Kind::Imported, 0};
    ds.edits.push_back(std::move(e));
  }
  local.imported = ds.edits.size();
  ds.rebuild_class_index();
  if (report) *report = std::move(local);
  return ds;
}

// ---------------------------------------------------------------------------
// Filtering pipeline
// ---------------------------------------------------------------------------

std::pair<Dataset, FilterReport> filter_pipeline(const Dataset& dataset,
                                                 int max_contexts) {
  Dataset kept;
  kept.task = dataset.task;
  FilterReport report;
  for (const auto& e : dataset.edits) {
    std::vector<minilang::Token> old_toks, new_toks;
    try {
      old_toks = minilang::tokenize(e.old_source);
      new_toks = minilang::tokenize(e.new_source);
    } catch (const minilang::LexError&) {
      ++report.dropped["untokenizable"];
      continue;
    }
    AstNode old_ast, new_ast;
    try {
      old_ast = minilang::parse(old_toks);
      new_ast = minilang::parse(new_toks);
    } catch (const minilang::ParseError&) {
      ++report.dropped["unparseable"];
      continue;
    }
    auto n_old = pathctx::extract_path_contexts(old_ast).size();
    auto n_new = pathctx::extract_path_contexts(new_ast).size();
    if (n_old > static_cast<std::size_t>(max_contexts) ||
        n_new > static_cast<std::size_t>(max_contexts)) {
      ++report.dropped["too_many_contexts"];
      continue;
    }
    kept.edits.push_back(e);
  }
  report.kept = kept.edits.size();
  kept.rebuild_class_index();
  return {std::move(kept), std::move(report)};
}

// ---------------------------------------------------------------------------
// Synthetic generators
// ---------------------------------------------------------------------------

namespace {

using minilang::make_leaf;
using minilang::make_node;

struct Pools {
  std::vector<std::string> methods;
  std::vector<std::string> vars;
  std::vector<std::string> types;
};

const Pools& full_pools() {
  static const Pools pools = [] {
    Pools p;
    const char* verb[] = {"get", "set", "load", "read", "parse",
                          "build", "check", "update", "create", "find"};
    const char* noun[] = {"Name", "Value", "Count", "Index", "Buffer",
                          "Config", "Token", "Message", "Result", "Status"};
    for (auto v : verb)
      for (auto n : noun) p.methods.push_back(std::string(v) + n);
    const char* adj[] = {"max", "min", "old", "new", "raw",
                         "tmp", "base", "next", "last", "cur"};
    const char* stem[] = {"Size", "Depth", "Url", "Path", "Id",
                          "Key", "Data", "Item", "Node", "User"};
    for (auto a : adj)
      for (auto s : stem) p.vars.push_back(std::string(a) + s);
    p.types = {"String", "Int32", "Response", "Request", "Config",
               "Handler", "Session", "Logger", "Buffer", "Token"};
    return p;
  }();
  return pools;
}

// Identifier pools visible to one draw. In leak mode each class sees only
// its own slice, so raw identifiers correlate with the label.
struct GenPools {
  std::span<const std::string> methods;
  std::span<const std::string> vars;
  std::span<const std::string> types;
};

GenPools pools_for(Task task, const std::string& label, const SynthOptions& options) {
  const Pools& all = full_pools();
  GenPools g{all.methods, all.vars, all.types};
  if (!options.class_specific_identifiers) return g;
  const auto& labels = labels_for(task);
  auto it = std::find(labels.begin(), labels.end(), label);
  std::size_t k = static_cast<std::size_t>(it - labels.begin());
  std::size_t n = labels.size();
  auto slice = [&](std::span<const std::string> v) {
    std::size_t width = v.size() / n;
    return v.subspan(k * width, width);
  };
  g.methods = slice(all.methods);
  g.vars = slice(all.vars);
  return g;
}

struct Gen {
  Rng& rng;
  GenPools pools;

  // Identifier frequencies in real code are heavy-tailed; draws follow a
  // Zipf(1.5) profile over the pool.
  std::size_t zipf_index(std::size_t n) {
    static std::vector<double> cumulative;  // shared across pool sizes <= 256
    static std::once_flag once;
    std::call_once(once, [] {
      cumulative.resize(256);
      double total = 0.0;
      for (std::size_t k = 0; k < 256; ++k) {
        total += 1.0 / std::pow(static_cast<double>(k + 1), 1.5);
        cumulative[k] = total;
      }
    });
    const double total = cumulative[n - 1];
    const double u = rng.uniform() * total;
    std::size_t lo = 0, hi = n - 1;
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (cumulative[mid] < u)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }

  std::string pick(std::span<const std::string> v) { return v[zipf_index(v.size())]; }
  std::string method() { return pick(pools.methods); }
  std::string var() { return pick(pools.vars); }
  std::string type() { return pick(pools.types); }

  std::string distinct_var(const std::string& not_this) {
    for (;;) {
      std::string v = var();
      if (v != not_this) return v;
    }
  }
  std::string distinct_method(const std::string& not_this) {
    for (;;) {
      std::string m = method();
      if (m != not_this) return m;
    }
  }

  AstNode name(const std::string& s) { return make_leaf(NodeKind::NameExpression, s); }
  AstNode lit(const std::string& s) { return make_leaf(NodeKind::Literal, s); }

  // bounded literal pools keep vocabularies small at desk scale
  AstNode int_lit() {
    static const char* pool[] = {"0",   "1",    "2",    "3",    "5",    "8",
                                 "10",  "16",   "32",   "40",   "64",   "100",
                                 "128", "200",  "255",  "500",  "512",  "1000",
                                 "1024", "2048", "3000", "4096", "5000", "8080"};
    return lit(pool[zipf_index(24)]);
  }
  AstNode float_lit() {
    static const char* pool[] = {"0.1", "0.25", "0.5",   "0.75", "1.5",
                                 "2.345", "3.14", "4.234", "6.0",  "9.81"};
    return lit(pool[zipf_index(10)]);
  }
  AstNode string_lit() {
    static const char* words[] = {"alpha", "beta", "gamma", "delta", "omega"};
    return lit(std::string("\"") + words[rng.below(5)] + "\"");
  }
  AstNode bool_lit() { return lit(rng.chance(0.5) ? "true" : "false"); }

  // Atomic argument: mostly names, sometimes literals.
  AstNode arg() {
    double r = rng.uniform();
    if (r < 0.6) return name(var());
    if (r < 0.85) return int_lit();
    return string_lit();
  }

  AstNode member(AstNode obj, const std::string& m) {
    std::vector<AstNode> kids;
    kids.push_back(std::move(obj));
    kids.push_back(name(m));
    return make_node(NodeKind::MemberAccess, std::move(kids));
  }

  AstNode call(AstNode callee, std::vector<AstNode> args) {
    std::vector<AstNode> kids;
    kids.push_back(std::move(callee));
    for (auto& a : args) kids.push_back(std::move(a));
    return make_node(NodeKind::MethodCallExpression, std::move(kids));
  }

  AstNode rand_call(std::size_t min_args, std::size_t max_args, bool allow_receiver) {
    std::size_t n_args = min_args + rng.below(max_args - min_args + 1);
    std::vector<AstNode> args;
    for (std::size_t i = 0; i < n_args; ++i) args.push_back(arg());
    // a bare f() has a single terminal and no path-contexts; qualify it
    bool receiver = n_args == 0 || (allow_receiver && rng.chance(0.3));
    AstNode callee = receiver ? member(name(var()), method()) : name(method());
    return call(std::move(callee), std::move(args));
  }

  AstNode comparison() {
    static const char* ops[] = {"==", "!=", "<", "<=", ">", ">="};
    std::vector<AstNode> kids;
    kids.push_back(name(var()));
    kids.push_back(rng.chance(0.5) ? int_lit() : name(var()));
    return make_node(NodeKind::BinaryExpression, std::move(kids), ops[rng.below(6)]);
  }

  AstNode condition() {
    if (rng.chance(0.6)) return comparison();
    return member(name(var()), var());
  }

  AstNode assign(AstNode lhs, AstNode rhs) {
    std::vector<AstNode> kids;
    kids.push_back(std::move(lhs));
    kids.push_back(std::move(rhs));
    return make_node(NodeKind::Assignment, std::move(kids), "=");
  }

  AstNode if_stmt(AstNode cond, std::optional<AstNode> body) {
    std::vector<AstNode> kids;
    kids.push_back(std::move(cond));
    if (body) kids.push_back(std::move(*body));
    return make_node(NodeKind::IfCondition, std::move(kids));
  }

  AstNode paren(AstNode inner) {
    std::vector<AstNode> kids;
    kids.push_back(std::move(inner));
    return make_node(NodeKind::ParenthesizedExpression, std::move(kids));
  }

  AstNode binary(const std::string& op, AstNode l, AstNode r) {
    std::vector<AstNode> kids;
    kids.push_back(std::move(l));
    kids.push_back(std::move(r));
    return make_node(NodeKind::BinaryExpression, std::move(kids), op);
  }

  AstNode unary(const std::string& op, AstNode operand) {
    std::vector<AstNode> kids;
    kids.push_back(std::move(operand));
    return make_node(NodeKind::UnaryExpression, std::move(kids), op);
  }
};

// Locate the method-name leaf of a call: child 0 when unqualified, the
// member child of the MemberAccess callee when qualified.
AstNode* method_name_of(AstNode& call_node) {
  AstNode& callee = call_node.children[0];
  if (callee.kind == NodeKind::NameExpression) return &callee;
  if (callee.kind == NodeKind::MemberAccess) return &callee.children[1];
  return nullptr;
}

using EditPair = std::pair<AstNode, AstNode>;

EditPair gen_swap_arguments(Gen& g) {
  for (;;) {
    AstNode old_ast = g.rand_call(2, 2, false);
    std::size_t first_arg = 1;
    std::size_t n_args = old_ast.children.size() - first_arg;
    std::size_t i = first_arg + g.rng.below(n_args);
    std::size_t j = first_arg + g.rng.below(n_args);
    if (i == j) continue;
    if (old_ast.children[i] == old_ast.children[j]) continue;
    AstNode new_ast = old_ast;
    std::swap(new_ast.children[i], new_ast.children[j]);
    minilang::assign_sibling_indices(new_ast);
    return {std::move(old_ast), std::move(new_ast)};
  }
}

AstNode* find_numeral(AstNode& n) {
  if (n.is_leaf()) {
    if (n.kind == NodeKind::Literal && !n.terminal->empty() &&
        (std::isdigit(static_cast<unsigned char>((*n.terminal)[0]))))
      return &n;
    return nullptr;
  }
  for (auto& c : n.children)
    if (AstNode* hit = find_numeral(c)) return hit;
  return nullptr;
}

EditPair gen_change_numeral(Gen& g) {
  for (;;) {
    bool use_float = g.rng.chance(0.2);
    AstNode numeral = use_float ? g.float_lit() : g.int_lit();
    std::vector<AstNode> args;
    args.push_back(std::move(numeral));
    if (g.rng.chance(0.6)) args.push_back(g.rng.chance(0.7) ? g.name(g.var()) : g.int_lit());
    g.rng.shuffle(args);
    AstNode old_ast = g.call(g.name(g.method()), std::move(args));
    minilang::assign_sibling_indices(old_ast);
    AstNode new_ast = old_ast;
    AstNode* target = find_numeral(new_ast);
    if (!target) continue;
    AstNode replacement = use_float ? g.float_lit() : g.int_lit();
    if (*replacement.terminal == *target->terminal) continue;
    target->terminal = replacement.terminal;
    return {std::move(old_ast), std::move(new_ast)};
  }
}

EditPair gen_change_operand(Gen& g) {
  AstNode lhs = g.name(g.var());
  AstNode rhs = g.name(g.distinct_var(*lhs.terminal));
  static const char* ops[] = {"+", "-", "*", "==", "!=", "<"};
  AstNode expr = g.binary(ops[g.rng.below(6)], std::move(lhs), std::move(rhs));
  AstNode old_ast = g.assign(g.name(g.var()), std::move(expr));
  minilang::assign_sibling_indices(old_ast);

  AstNode new_ast = old_ast;
  // walk to the BinaryExpression and replace one name operand
  AstNode* bin = nullptr;
  std::function<void(AstNode&)> find = [&](AstNode& n) {
    if (bin) return;
    if (n.kind == NodeKind::BinaryExpression) {
      bin = &n;
      return;
    }
    for (auto& c : n.children) find(c);
  };
  find(new_ast);
  std::size_t side = g.rng.below(2);
  AstNode& operand = bin->children[side];
  operand.terminal = g.distinct_var(*operand.terminal);
  return {std::move(old_ast), std::move(new_ast)};
}

EditPair gen_change_operator(Gen& g) {
  static const std::vector<std::vector<std::string>> groups = {
      {"+", "-"}, {"*", "/", "%"}, {"<", "<=", ">", ">="}, {"==", "!="}};
  const auto& group = groups[g.rng.below(groups.size())];
  std::size_t a = g.rng.below(group.size());
  std::size_t b = g.rng.below(group.size());
  while (b == a) b = g.rng.below(group.size());

  AstNode expr = g.binary(group[a], g.name(g.var()),
                          g.rng.chance(0.4) ? g.int_lit() : g.name(g.var()));
  AstNode old_ast = g.assign(g.name(g.var()), std::move(expr));
  minilang::assign_sibling_indices(old_ast);

  AstNode new_ast = old_ast;
  std::function<AstNode*(AstNode&)> find = [&](AstNode& n) -> AstNode* {
    if (n.kind == NodeKind::BinaryExpression) return &n;
    for (auto& c : n.children)
      if (AstNode* hit = find(c)) return hit;
    return nullptr;
  };
  find(new_ast)->op = group[b];
  return {std::move(old_ast), std::move(new_ast)};
}

EditPair gen_different_method(Gen& g) {
  AstNode old_ast = g.rand_call(0, 2, true);
  minilang::assign_sibling_indices(old_ast);
  AstNode new_ast = old_ast;
  AstNode* name_leaf = method_name_of(new_ast);
  name_leaf->terminal = g.distinct_method(*name_leaf->terminal);
  return {std::move(old_ast), std::move(new_ast)};
}

EditPair gen_specific_if(Gen& g, const std::string& op) {
  AstNode cond = g.condition();
  std::optional<AstNode> body;
  if (g.rng.chance(0.5)) body = g.rand_call(0, 2, false);
  AstNode old_ast = g.if_stmt(cond, std::move(body));
  minilang::assign_sibling_indices(old_ast);

  AstNode extra;
  double r = g.rng.uniform();
  if (r < 0.4)
    extra = g.name(g.var());
  else if (r < 0.7)
    extra = g.unary("!", g.name(g.var()));
  else
    extra = g.comparison();

  AstNode new_ast = old_ast;
  AstNode new_cond = g.binary(op, std::move(new_ast.children[0]), std::move(extra));
  new_ast.children[0] = std::move(new_cond);
  minilang::assign_sibling_indices(new_ast);
  return {std::move(old_ast), std::move(new_ast)};
}

EditPair gen_overload_deleted(Gen& g) {
  AstNode old_ast = g.rand_call(2, 4, true);
  minilang::assign_sibling_indices(old_ast);
  AstNode new_ast = old_ast;
  std::size_t n_args = old_ast.children.size() - 1;
  std::size_t remove = 1 + g.rng.below(n_args - 1 > 0 ? std::min<std::size_t>(2, n_args - 1) : 1);
  for (std::size_t k = 0; k < remove; ++k) new_ast.children.pop_back();
  minilang::assign_sibling_indices(new_ast);
  return {std::move(old_ast), std::move(new_ast)};
}

EditPair gen_overload_more(Gen& g) {
  AstNode old_ast = g.rand_call(0, 3, true);
  minilang::assign_sibling_indices(old_ast);
  AstNode new_ast = old_ast;
  std::size_t add = 1 + g.rng.below(2);
  for (std::size_t k = 0; k < add; ++k) new_ast.children.push_back(g.arg());
  minilang::assign_sibling_indices(new_ast);
  return {std::move(old_ast), std::move(new_ast)};
}

EditPair gen_change_caller(Gen& g) {
  std::size_t n_args = g.rng.below(3);
  std::vector<AstNode> args;
  for (std::size_t i = 0; i < n_args; ++i) args.push_back(g.arg());
  std::string recv = g.var();
  AstNode old_ast = g.call(g.member(g.name(recv), g.method()), std::move(args));
  minilang::assign_sibling_indices(old_ast);
  AstNode new_ast = old_ast;
  new_ast.children[0].children[0].terminal = g.distinct_var(recv);
  return {std::move(old_ast), std::move(new_ast)};
}

AstNode* find_bool(AstNode& n) {
  if (n.is_leaf()) {
    if (n.kind == NodeKind::Literal && (*n.terminal == "true" || *n.terminal == "false"))
      return &n;
    return nullptr;
  }
  for (auto& c : n.children)
    if (AstNode* hit = find_bool(c)) return hit;
  return nullptr;
}

EditPair gen_swap_boolean(Gen& g) {
  AstNode old_ast;
  if (g.rng.chance(0.5)) {
    std::vector<AstNode> args;
    args.push_back(g.bool_lit());
    if (g.rng.chance(0.5)) args.push_back(g.arg());
    old_ast = g.call(g.name(g.method()), std::move(args));
  } else {
    old_ast = g.assign(g.name(g.var()), g.bool_lit());
  }
  minilang::assign_sibling_indices(old_ast);
  AstNode new_ast = old_ast;
  AstNode* b = find_bool(new_ast);
  b->terminal = (*b->terminal == "true") ? "false" : "true";
  return {std::move(old_ast), std::move(new_ast)};
}

// --- analyzers -------------------------------------------------------------

EditPair gen_rcs1001_add_braces(Gen& g) {
  AstNode cond = g.condition();
  AstNode body = g.rand_call(0, 2, true);
  AstNode old_ast = g.if_stmt(cond, body);
  minilang::assign_sibling_indices(old_ast);
  AstNode new_ast = old_ast;
  std::vector<AstNode> stmts;
  stmts.push_back(std::move(new_ast.children[1]));
  new_ast.children[1] = make_node(NodeKind::Block, std::move(stmts));
  minilang::assign_sibling_indices(new_ast);
  return {std::move(old_ast), std::move(new_ast)};
}

EditPair gen_rcs1032_remove_parens(Gen& g) {
  AstNode atom;
  double r = g.rng.uniform();
  if (r < 0.5)
    atom = g.name(g.var());
  else if (r < 0.8)
    atom = g.rand_call(0, 1, false);
  else
    atom = g.int_lit();

  bool doubled = g.rng.chance(0.3);
  AstNode wrapped = g.paren(atom);
  if (doubled) wrapped = g.paren(std::move(wrapped));
  AstNode unwrapped = doubled ? g.paren(atom) : atom;

  AstNode old_ast, new_ast;
  double host = g.rng.uniform();
  if (host < 0.5) {
    std::string m = g.method();
    std::vector<AstNode> a1, a2;
    a1.push_back(std::move(wrapped));
    a2.push_back(std::move(unwrapped));
    old_ast = g.call(g.name(m), std::move(a1));
    new_ast = g.call(g.name(m), std::move(a2));
  } else {
    std::string lhs = g.var();
    old_ast = g.assign(g.name(lhs), std::move(wrapped));
    new_ast = g.assign(g.name(lhs), std::move(unwrapped));
  }
  minilang::assign_sibling_indices(old_ast);
  minilang::assign_sibling_indices(new_ast);
  return {std::move(old_ast), std::move(new_ast)};
}

EditPair gen_rcs1049_simplify_bool(Gen& g) {
  AstNode operand = g.rng.chance(0.7) ? g.name(g.var()) : g.member(g.name(g.var()), g.var());
  std::string op = g.rng.chance(0.5) ? "==" : "!=";
  std::string literal = g.rng.chance(0.5) ? "true" : "false";
  AstNode old_cond = g.binary(op, operand, g.lit(literal));
  bool negated = (op == "==" && literal == "false") || (op == "!=" && literal == "true");
  AstNode new_cond = negated ? g.unary("!", operand) : operand;

  std::optional<AstNode> body = g.rand_call(0, 1, false);
  AstNode old_ast = g.if_stmt(std::move(old_cond), body);
  AstNode new_ast = g.if_stmt(std::move(new_cond), std::move(body));
  minilang::assign_sibling_indices(old_ast);
  minilang::assign_sibling_indices(new_ast);
  return {std::move(old_ast), std::move(new_ast)};
}

EditPair gen_rcs1085_auto_property(Gen& g) {
  std::string type = g.type();
  std::string field = g.var();
  std::string prop = field;
  prop[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(prop[0])));

  std::vector<AstNode> get_body;
  get_body.push_back(g.name(field));
  std::vector<AstNode> set_body;
  set_body.push_back(g.assign(g.name(field), g.name("value")));

  std::vector<AstNode> old_kids;
  old_kids.push_back(g.name(type));
  old_kids.push_back(g.name(prop));
  old_kids.push_back(make_node(NodeKind::Block, std::move(get_body)));
  old_kids.push_back(make_node(NodeKind::Block, std::move(set_body)));
  AstNode old_ast = make_node(NodeKind::PropertyDeclaration, std::move(old_kids));

  std::vector<AstNode> new_kids;
  new_kids.push_back(g.name(type));
  new_kids.push_back(g.name(prop));
  AstNode new_ast = make_node(NodeKind::PropertyDeclaration, std::move(new_kids));
  minilang::assign_sibling_indices(old_ast);
  minilang::assign_sibling_indices(new_ast);
  return {std::move(old_ast), std::move(new_ast)};
}

EditPair gen_rcs1123_precedence_parens(Gen& g) {
  static const std::vector<std::pair<std::string, std::string>> combos = {
      {"+", "*"}, {"-", "*"}, {"||", "&&"}, {"==", "+"}, {"&&", "=="}};
  const auto& [outer, inner] = combos[g.rng.below(combos.size())];
  AstNode inner_expr = g.binary(inner, g.name(g.var()),
                                g.rng.chance(0.5) ? g.int_lit() : g.name(g.var()));
  AstNode other = g.name(g.var());
  std::string host_var = g.var();
  bool inner_on_right = g.rng.chance(0.5);

  auto build = [&](bool parens) {
    AstNode in = inner_expr;
    AstNode wrapped = parens ? g.paren(std::move(in)) : std::move(in);
    AstNode lhs_other = other;
    AstNode expr = inner_on_right
                       ? g.binary(outer, std::move(lhs_other), std::move(wrapped))
                       : g.binary(outer, std::move(wrapped), std::move(lhs_other));
    AstNode host;
    if (outer == "||" || outer == "&&" || outer == "==")
      host = g.if_stmt(std::move(expr), std::nullopt);
    else
      host = g.assign(g.name(host_var), std::move(expr));
    minilang::assign_sibling_indices(host);
    return host;
  };
  return {build(false), build(true)};
}

EditPair gen_rcs1124_inline_local(Gen& g) {
  std::string tmp = g.var();
  AstNode rhs = g.rand_call(0, 1, false);

  std::size_t n_args = 1 + g.rng.below(2);
  std::size_t tmp_pos = g.rng.below(n_args);
  std::string use_method = g.method();
  // Non-tmp argument names must match between old and new; draw them once.
  std::vector<AstNode> fixed_args;
  for (std::size_t i = 0; i < n_args; ++i)
    fixed_args.push_back(g.name(g.distinct_var(tmp)));
  auto make_use = [&](AstNode replacement) {
    std::vector<AstNode> args;
    for (std::size_t i = 0; i < n_args; ++i) {
      if (i == tmp_pos)
        args.push_back(std::move(replacement));
      else
        args.push_back(fixed_args[i]);
    }
    return g.call(g.name(use_method), std::move(args));
  };

  std::vector<AstNode> old_stmts;
  old_stmts.push_back(g.assign(g.name(tmp), rhs));
  old_stmts.push_back(make_use(g.name(tmp)));
  AstNode old_ast = make_node(NodeKind::Block, std::move(old_stmts));

  std::vector<AstNode> new_stmts;
  new_stmts.push_back(make_use(std::move(rhs)));
  AstNode new_ast = make_node(NodeKind::Block, std::move(new_stmts));
  minilang::assign_sibling_indices(old_ast);
  minilang::assign_sibling_indices(new_ast);
  return {std::move(old_ast), std::move(new_ast)};
}

EditPair gen_rcs1146_conditional_access(Gen& g) {
  std::string obj = g.var();
  std::string m = g.method();
  std::size_t n_args = g.rng.below(3);
  std::vector<AstNode> args1, args2;
  for (std::size_t i = 0; i < n_args; ++i) {
    AstNode a = g.arg();
    args1.push_back(a);
    args2.push_back(std::move(a));
  }
  AstNode guard = g.binary("!=", g.name(obj), g.lit("null"));
  AstNode guarded_call = g.call(g.member(g.name(obj), m), std::move(args1));
  AstNode old_ast = g.if_stmt(std::move(guard), std::move(guarded_call));

  std::vector<AstNode> ca_kids;
  ca_kids.push_back(g.name(obj));
  ca_kids.push_back(g.name(m));
  AstNode ca = make_node(NodeKind::ConditionalAccess, std::move(ca_kids));
  AstNode new_ast = g.call(std::move(ca), std::move(args2));
  minilang::assign_sibling_indices(old_ast);
  minilang::assign_sibling_indices(new_ast);
  return {std::move(old_ast), std::move(new_ast)};
}

EditPair gen_rcs1163_unused_param(Gen& g) {
  std::size_t n_params = 2 + g.rng.below(3);
  std::vector<std::string> params;
  while (params.size() < n_params) {
    std::string p = g.var();
    if (std::find(params.begin(), params.end(), p) == params.end()) params.push_back(p);
  }
  std::string m = g.method();
  std::size_t target = g.rng.below(n_params);

  auto build = [&](bool renamed) {
    std::vector<AstNode> args;
    for (std::size_t i = 0; i < n_params; ++i)
      args.push_back(g.name(renamed && i == target ? "_" : params[i]));
    AstNode ast = g.call(g.name(m), std::move(args));
    minilang::assign_sibling_indices(ast);
    return ast;
  };
  return {build(false), build(true)};
}

EditPair gen_rcs1168_base_name(Gen& g) {
  std::size_t n_params = 1 + g.rng.below(3);
  std::size_t target = g.rng.below(n_params);
  static const char* suffixes[] = {"2", "Param", "Local", "Arg"};
  std::string base = g.var();
  std::string derived = base + suffixes[g.rng.below(4)];

  std::vector<std::string> params;
  for (std::size_t i = 0; i < n_params; ++i)
    params.push_back(i == target ? derived : g.distinct_var(base));
  std::string m = g.method();

  auto build = [&](bool renamed) {
    std::vector<AstNode> args;
    for (std::size_t i = 0; i < n_params; ++i)
      args.push_back(g.name(renamed && i == target ? base : params[i]));
    AstNode ast = g.call(g.name(m), std::move(args));
    minilang::assign_sibling_indices(ast);
    return ast;
  };
  return {build(false), build(true)};
}

EditPair gen_rcs1220_pattern_match(Gen& g) {
  std::string obj = g.var();
  std::string type = g.type();
  std::string binding = type;
  binding[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(binding[0])));
  std::string m = g.method();

  std::vector<AstNode> is_kids;
  is_kids.push_back(g.name(obj));
  is_kids.push_back(g.name(type));
  AstNode is_check = make_node(NodeKind::BinaryExpression, std::move(is_kids), "is");

  std::vector<AstNode> cast_kids;
  cast_kids.push_back(g.name(type));
  cast_kids.push_back(g.name(obj));
  AstNode cast = make_node(NodeKind::CastExpression, std::move(cast_kids));
  AstNode old_call = g.call(g.member(g.paren(std::move(cast)), m), {});
  AstNode old_cond = g.binary("&&", std::move(is_check), std::move(old_call));
  AstNode old_ast = g.if_stmt(std::move(old_cond), std::nullopt);

  std::vector<AstNode> pm_kids;
  pm_kids.push_back(g.name(obj));
  pm_kids.push_back(g.name(type));
  pm_kids.push_back(g.name(binding));
  AstNode pattern = make_node(NodeKind::PatternMatch, std::move(pm_kids));
  AstNode new_call = g.call(g.member(g.name(binding), m), {});
  AstNode new_cond = g.binary("&&", std::move(pattern), std::move(new_call));
  AstNode new_ast = g.if_stmt(std::move(new_cond), std::nullopt);
  minilang::assign_sibling_indices(old_ast);
  minilang::assign_sibling_indices(new_ast);
  return {std::move(old_ast), std::move(new_ast)};
}

EditPair generate_for_label(Task task, const std::string& label, Gen& g) {
  if (task == Task::BugFix) {
    if (label == "swap arguments") return gen_swap_arguments(g);
    if (label == "change numeral") return gen_change_numeral(g);
    if (label == "change operand") return gen_change_operand(g);
    if (label == "change operator") return gen_change_operator(g);
    if (label == "different method same args") return gen_different_method(g);
    if (label == "less specific if") return gen_specific_if(g, "||");
    if (label == "more specific if") return gen_specific_if(g, "&&");
    if (label == "overload method deleted args") return gen_overload_deleted(g);
    if (label == "overload method more args") return gen_overload_more(g);
    if (label == "change caller in function call") return gen_change_caller(g);
    if (label == "swap boolean literal") return gen_swap_boolean(g);
  } else {
    if (label == "RCS1001") return gen_rcs1001_add_braces(g);
    if (label == "RCS1032") return gen_rcs1032_remove_parens(g);
    if (label == "RCS1049") return gen_rcs1049_simplify_bool(g);
    if (label == "RCS1085") return gen_rcs1085_auto_property(g);
    if (label == "RCS1123") return gen_rcs1123_precedence_parens(g);
    if (label == "RCS1124") return gen_rcs1124_inline_local(g);
    if (label == "RCS1146") return gen_rcs1146_conditional_access(g);
    if (label == "RCS1163") return gen_rcs1163_unused_param(g);
    if (label == "RCS1168") return gen_rcs1168_base_name(g);
    if (label == "RCS1220") return gen_rcs1220_pattern_match(g);
  }
  throw std::invalid_argument("unknown label for task: " + label);
}

CodeEdit synth_one(Task task, const std::string& label, Rng& rng,
                   const SynthOptions& options) {
  Gen g{rng, pools_for(task, label, options)};
  for (;;) {
    EditPair pair = generate_for_label(task, label, g);
    std::string old_src = minilang::pretty_print(pair.first);
    std::string new_src = minilang::pretty_print(pair.second);
    if (old_src == new_src) continue;  // re-draw until the rewrite changed text
    CodeEdit e;
    e.old_source = std::move(old_src);
    e.new_source = std::move(new_src);
    e.label = label;
    e.task = task;
    e.provenance = {Provenance::Kind::Synthetic, 0};
    return e;
  }
}

std::string slugify(const std::string& label) {
  std::string s = label;
  for (char& c : s)
    if (c == ' ') c = '-';
  return s;
}

}  // namespace

CodeEdit synth_sstub(const std::string& bug_template, Rng& rng,
                     const SynthOptions& options) {
  const auto& labels = bugfix_labels();
  if (std::find(labels.begin(), labels.end(), bug_template) == labels.end())
    throw std::invalid_argument("unknown bug template: " + bug_template);
  return synth_one(Task::BugFix, bug_template, rng, options);
}

CodeEdit synth_transformation(const std::string& analyzer, Rng& rng,
                              const SynthOptions& options) {
  const auto& labels = transformation_labels();
  if (std::find(labels.begin(), labels.end(), analyzer) == labels.end())
    throw std::invalid_argument("unknown analyzer tag: " + analyzer);
  return synth_one(Task::CodeTransformation, analyzer, rng, options);
}

Dataset make_synthetic_corpus(Task task, int per_class, std::uint64_t seed,
                              const SynthOptions& options) {
  Dataset ds;
  ds.task = task;
  std::set<std::pair<std::string, std::string>> seen;
  const auto& labels = labels_for(task);
  for (std::size_t li = 0; li < labels.size(); ++li) {
    Rng rng(seed + 0x9e3779b97f4a7c15ULL * (li + 1));
    int made = 0;
    while (made < per_class) {
      CodeEdit e = synth_one(task, labels[li], rng, options);
      if (!seen.emplace(e.old_source, e.new_source).second) continue;
      e.id = std::string(task_name(task)) + "-" + slugify(labels[li]) + "-" +
             std::to_string(made);
      e.provenance.seed = seed;
      ds.edits.push_back(std::move(e));
      ++made;
    }
  }
  ds.rebuild_class_index();
  return ds;
}

void save_context_fixtures(const Dataset& dataset, const std::filesystem::path& path,
                           int max_contexts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  auto side_json = [](const std::vector<pathctx::PathContext>& side) {
    json arr = json::array();
    for (const auto& ctx : side)
      arr.push_back(json::array({ctx.left_subtokens, ctx.path_labels, ctx.right_subtokens}));
    return arr;
  };
  for (const auto& e : dataset.edits) {
    auto enc = pathctx::encode_edit(minilang::parse_source(e.old_source),
                                    minilang::parse_source(e.new_source), max_contexts);
    json j;
    j["id"] = e.id;
    j["label"] = e.label;
    j["old_contexts"] = side_json(enc.old_contexts);
    j["new_contexts"] = side_json(enc.new_contexts);
    out << j.dump() << "\n";
  }
}

}  // namespace editvec::data
