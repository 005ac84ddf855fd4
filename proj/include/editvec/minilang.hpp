#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace editvec::minilang {

enum class TokenKind {
  Identifier,
  IntLiteral,
  FloatLiteral,
  StringLiteral,
  BoolLiteral,
  Keyword,
  Operator,
  Punctuation,
};

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t begin = 0;  // byte offset into the source
  std::size_t end = 0;    // one past the last byte

  bool operator==(const Token&) const = default;
};

// Raised on any byte outside the grammar's alphabet. Marks the data-point
// as untokenizable so the filtering pipeline can drop it.
struct LexError : std::runtime_error {
  std::size_t offset;
  LexError(const std::string& msg, std::size_t off)
      : std::runtime_error(msg), offset(off) {}
};

struct ParseError : std::runtime_error {
  std::size_t token_index;
  ParseError(const std::string& msg, std::size_t idx)
      : std::runtime_error(msg), token_index(idx) {}
};

enum class NodeKind {
  NameExpression,
  MethodCallExpression,
  BinaryExpression,
  UnaryExpression,
  Literal,
  ParenthesizedExpression,
  CastExpression,
  Assignment,
  IfCondition,
  ArgumentList,
  MemberAccess,
  Block,
  PatternMatch,
  ConditionalAccess,
  PropertyDeclaration,
};

std::string_view node_kind_name(NodeKind k);

struct AstNode {
  NodeKind kind;
  int sibling_index = 0;  // ordinal among the parent's children
  std::string op;         // operator text for Binary/Unary/Assignment nodes
  std::optional<std::string> terminal;  // present iff the node is a leaf
  std::vector<AstNode> children;

  bool is_leaf() const { return children.empty(); }
  bool operator==(const AstNode& other) const;
};

AstNode make_leaf(NodeKind kind, std::string token);
AstNode make_node(NodeKind kind, std::vector<AstNode> children, std::string op = "");

// Recomputes sibling_index for every child so that child i carries i.
// Generators call this after structural rewrites.
void assign_sibling_indices(AstNode& root);

std::vector<Token> tokenize(std::string_view source);
AstNode parse(const std::vector<Token>& tokens);
AstNode parse_source(std::string_view source);

std::string pretty_print(const AstNode& root);

// Leaves of the tree in source (depth-first) order.
std::vector<const AstNode*> terminals(const AstNode& root);

}  // namespace editvec::minilang
