#include "editvec/canon.hpp"

#include <cstdio>
#include <unordered_map>

namespace editvec::canon {

using minilang::Token;
using minilang::TokenKind;

namespace {

// 0.001 * k, trimmed of trailing zeros but kept decimal so the result still
// lexes as a float literal.
std::string float_pattern(int k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", static_cast<double>(k) / 1000.0);
  std::string s(buf);
  while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  return s;
}

class Mapping {
 public:
  std::string canonical(const Token& t) {
    switch (t.kind) {
      case TokenKind::Identifier:
        return mapped(identifiers_, t.text, [](int k) { return "var" + std::to_string(k); });
      case TokenKind::IntLiteral:
        return mapped(ints_, t.text, [](int k) { return std::to_string(k); });
      case TokenKind::FloatLiteral:
        return mapped(floats_, t.text, float_pattern);
      case TokenKind::StringLiteral:
        return mapped(strings_, t.text,
                      [](int k) { return "\"string" + std::to_string(k) + "\""; });
      default:
        return t.text;  // bools, keywords, operators, punctuation unchanged
    }
  }

 private:
  template <typename MakeName>
  std::string mapped(std::unordered_map<std::string, std::string>& table,
                     const std::string& original, MakeName make_name) {
    auto it = table.find(original);
    if (it != table.end()) return it->second;
    std::string name = make_name(static_cast<int>(table.size()) + 1);
    table.emplace(original, name);
    return name;
  }

  std::unordered_map<std::string, std::string> identifiers_;
  std::unordered_map<std::string, std::string> ints_;
  std::unordered_map<std::string, std::string> floats_;
  std::unordered_map<std::string, std::string> strings_;
};

}  // namespace

std::string render_tokens(const std::vector<Token>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (i > 0) {
      const Token& prev = tokens[i - 1];
      bool glue_prev = prev.text == "." || prev.text == "?." || prev.text == "(" ||
                       prev.text == "!" || prev.text == "~";
      bool glue_cur = t.text == "." || t.text == "?." || t.text == "," ||
                      t.text == ";" || t.text == ")" ||
                      (t.text == "(" && (prev.kind == TokenKind::Identifier ||
                                         prev.text == ")"));
      if (!glue_prev && !glue_cur) out += ' ';
    }
    out += t.text;
  }
  return out;
}

std::pair<std::string, std::string> canonicalize_pair(const std::string& old_source,
                                                      const std::string& new_source) {
  std::vector<Token> old_tokens = minilang::tokenize(old_source);
  std::vector<Token> new_tokens = minilang::tokenize(new_source);

  Mapping mapping;
  for (auto* side : {&old_tokens, &new_tokens})
    for (Token& t : *side) t.text = mapping.canonical(t);

  return {render_tokens(old_tokens), render_tokens(new_tokens)};
}

data::CodeEdit canonicalize_edit(const data::CodeEdit& edit) {
  data::CodeEdit out = edit;
  auto [old_src, new_src] = canonicalize_pair(edit.old_source, edit.new_source);
  out.old_source = std::move(old_src);
  out.new_source = std::move(new_src);
  return out;
}

data::Dataset canonicalize_dataset(const data::Dataset& dataset) {
  data::Dataset out;
  out.task = dataset.task;
  out.edits.reserve(dataset.edits.size());
  for (const auto& e : dataset.edits) out.edits.push_back(canonicalize_edit(e));
  out.rebuild_class_index();
  return out;
}

}  // namespace editvec::canon
