#include "editvec/minilang.hpp"

#include <array>
#include <cctype>
#include <utility>

namespace editvec::minilang {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

const std::array<std::string_view, 5> kKeywords = {"if", "is", "get", "set", "null"};

bool is_keyword(std::string_view s) {
  for (auto k : kKeywords)
    if (k == s) return true;
  return false;
}

// Longest operators first so maximal munch falls out of the scan order.
const std::array<std::string_view, 12> kMultiCharOps = {
    "?.", "||", "&&", "==", "!=", "<=", ">=", "+", "-", "*", "/", "%"};

}  // namespace

std::string_view node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::NameExpression: return "NameExpression";
    case NodeKind::MethodCallExpression: return "MethodCallExpression";
    case NodeKind::BinaryExpression: return "BinaryExpression";
    case NodeKind::UnaryExpression: return "UnaryExpression";
    case NodeKind::Literal: return "Literal";
    case NodeKind::ParenthesizedExpression: return "ParenthesizedExpression";
    case NodeKind::CastExpression: return "CastExpression";
    case NodeKind::Assignment: return "Assignment";
    case NodeKind::IfCondition: return "IfCondition";
    case NodeKind::ArgumentList: return "ArgumentList";
    case NodeKind::MemberAccess: return "MemberAccess";
    case NodeKind::Block: return "Block";
    case NodeKind::PatternMatch: return "PatternMatch";
    case NodeKind::ConditionalAccess: return "ConditionalAccess";
    case NodeKind::PropertyDeclaration: return "PropertyDeclaration";
  }
  return "?";
}

bool AstNode::operator==(const AstNode& other) const {
  return kind == other.kind && op == other.op && terminal == other.terminal &&
         children == other.children;
}

AstNode make_leaf(NodeKind kind, std::string token) {
  AstNode n;
  n.kind = kind;
  n.terminal = std::move(token);
  return n;
}

AstNode make_node(NodeKind kind, std::vector<AstNode> children, std::string op) {
  AstNode n;
  n.kind = kind;
  n.children = std::move(children);
  n.op = std::move(op);
  for (std::size_t i = 0; i < n.children.size(); ++i)
    n.children[i].sibling_index = static_cast<int>(i);
  return n;
}

void assign_sibling_indices(AstNode& root) {
  for (std::size_t i = 0; i < root.children.size(); ++i) {
    root.children[i].sibling_index = static_cast<int>(i);
    assign_sibling_indices(root.children[i]);
  }
}

std::vector<Token> tokenize(std::string_view source) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = source.size();
  while (i < n) {
    char c = source[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (is_ident_start(c)) {
      while (i < n && is_ident_char(source[i])) ++i;
      std::string text(source.substr(start, i - start));
      TokenKind kind = TokenKind::Identifier;
      if (text == "true" || text == "false")
        kind = TokenKind::BoolLiteral;
      else if (is_keyword(text))
        kind = TokenKind::Keyword;
      out.push_back({kind, std::move(text), start, i});
      continue;
    }
    if (is_digit(c)) {
      while (i < n && is_digit(source[i])) ++i;
      bool is_float = false;
      if (i + 1 < n && source[i] == '.' && is_digit(source[i + 1])) {
        is_float = true;
        ++i;
        while (i < n && is_digit(source[i])) ++i;
      }
      out.push_back({is_float ? TokenKind::FloatLiteral : TokenKind::IntLiteral,
                     std::string(source.substr(start, i - start)), start, i});
      continue;
    }
    if (c == '"') {
      ++i;
      while (i < n && source[i] != '"') {
        if (source[i] == '\\' && i + 1 < n)
          i += 2;
        else
          ++i;
      }
      if (i >= n) throw LexError("unterminated string literal", start);
      ++i;  // closing quote
      out.push_back({TokenKind::StringLiteral,
                     std::string(source.substr(start, i - start)), start, i});
      continue;
    }
    if (c == '(' || c == ')' || c == '{' || c == '}' || c == ',' || c == ';' || c == '.') {
      out.push_back({TokenKind::Punctuation, std::string(1, c), start, start + 1});
      ++i;
      continue;
    }
    bool matched = false;
    for (auto op : kMultiCharOps) {
      if (source.substr(i, op.size()) == op) {
        out.push_back({TokenKind::Operator, std::string(op), start, start + op.size()});
        i += op.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (c == '<' || c == '>' || c == '=' || c == '!' || c == '&' || c == '|' ||
        c == '^' || c == '~') {
      out.push_back({TokenKind::Operator, std::string(1, c), start, start + 1});
      ++i;
      continue;
    }
    throw LexError("character outside the grammar alphabet", start);
  }
  return out;
}

namespace {

// Recursive-descent parser for one statement or expression.
class Parser {
 public:
  explicit Parser(const std::vector<Token>& tokens) : toks_(tokens) {}

  AstNode run() {
    if (toks_.empty()) throw ParseError("empty input", 0);
    AstNode root = statement();
    if (pos_ != toks_.size()) throw ParseError("trailing tokens after statement", pos_);
    assign_sibling_indices(root);
    return root;
  }

 private:
  const std::vector<Token>& toks_;
  std::size_t pos_ = 0;

  bool done() const { return pos_ >= toks_.size(); }
  const Token& peek(std::size_t ahead = 0) const {
    static const Token eof{TokenKind::Punctuation, "", 0, 0};
    return pos_ + ahead < toks_.size() ? toks_[pos_ + ahead] : eof;
  }
  bool at(TokenKind k, std::string_view text) const {
    return !done() && toks_[pos_].kind == k && toks_[pos_].text == text;
  }
  bool at_punct(std::string_view text) const { return at(TokenKind::Punctuation, text); }
  bool at_op(std::string_view text) const { return at(TokenKind::Operator, text); }
  bool at_keyword(std::string_view text) const { return at(TokenKind::Keyword, text); }

  const Token& expect(TokenKind k, std::string_view text, const char* what) {
    if (!at(k, text)) throw ParseError(std::string("expected ") + what, pos_);
    return toks_[pos_++];
  }

  AstNode statement() {
    if (at_punct("{")) return block();
    if (at_keyword("if")) return if_statement();
    if (peek().kind == TokenKind::Identifier && peek(1).kind == TokenKind::Identifier &&
        peek(2).kind == TokenKind::Punctuation && peek(2).text == "{")
      return property_declaration();
    AstNode e = expression();
    if (at_punct(";")) ++pos_;  // consumed, no node
    return e;
  }

  AstNode block() {
    expect(TokenKind::Punctuation, "{", "'{'");
    std::vector<AstNode> stmts;
    while (!at_punct("}")) {
      if (done()) throw ParseError("unterminated block", pos_);
      stmts.push_back(statement());
    }
    if (stmts.empty()) throw ParseError("empty block", pos_);
    ++pos_;  // '}'
    return make_node(NodeKind::Block, std::move(stmts));
  }

  AstNode if_statement() {
    ++pos_;  // 'if'
    expect(TokenKind::Punctuation, "(", "'(' after if");
    std::vector<AstNode> kids;
    kids.push_back(expression());
    expect(TokenKind::Punctuation, ")", "')' closing if condition");
    if (at_punct(";")) {
      ++pos_;
    } else if (!done() && !at_punct("}")) {
      kids.push_back(statement());
    }
    return make_node(NodeKind::IfCondition, std::move(kids));
  }

  // Type Name { get <body> set <body> } where <body> is ';' or a block.
  AstNode property_declaration() {
    std::vector<AstNode> kids;
    kids.push_back(make_leaf(NodeKind::NameExpression, toks_[pos_++].text));
    kids.push_back(make_leaf(NodeKind::NameExpression, toks_[pos_++].text));
    expect(TokenKind::Punctuation, "{", "'{' opening accessor list");
    expect(TokenKind::Keyword, "get", "'get' accessor");
    std::optional<AstNode> get_body = accessor_body();
    expect(TokenKind::Keyword, "set", "'set' accessor");
    std::optional<AstNode> set_body = accessor_body();
    expect(TokenKind::Punctuation, "}", "'}' closing accessor list");
    if (get_body.has_value() != set_body.has_value())
      throw ParseError("property accessors must both have bodies or neither", pos_);
    if (get_body) {
      kids.push_back(std::move(*get_body));
      kids.push_back(std::move(*set_body));
    }
    return make_node(NodeKind::PropertyDeclaration, std::move(kids));
  }

  std::optional<AstNode> accessor_body() {
    if (at_punct(";")) {
      ++pos_;
      return std::nullopt;
    }
    if (at_punct("{")) return block();
    throw ParseError("expected ';' or block in accessor", pos_);
  }

  AstNode expression() { return assignment(); }

  AstNode assignment() {
    AstNode lhs = logical_or();
    if (at_op("=")) {
      if (lhs.kind != NodeKind::NameExpression && lhs.kind != NodeKind::MemberAccess)
        throw ParseError("assignment target must be a name or member access", pos_);
      ++pos_;
      AstNode rhs = assignment();
      std::vector<AstNode> kids;
      kids.push_back(std::move(lhs));
      kids.push_back(std::move(rhs));
      return make_node(NodeKind::Assignment, std::move(kids), "=");
    }
    return lhs;
  }

  AstNode binary_chain(AstNode (Parser::*next)(), std::initializer_list<std::string_view> ops) {
    AstNode lhs = (this->*next)();
    for (;;) {
      bool hit = false;
      for (auto o : ops) {
        if (at_op(o)) {
          std::string op = toks_[pos_++].text;
          AstNode rhs = (this->*next)();
          std::vector<AstNode> kids;
          kids.push_back(std::move(lhs));
          kids.push_back(std::move(rhs));
          lhs = make_node(NodeKind::BinaryExpression, std::move(kids), std::move(op));
          hit = true;
          break;
        }
      }
      if (!hit) return lhs;
    }
  }

  AstNode logical_or() { return binary_chain(&Parser::logical_and, {"||"}); }
  AstNode logical_and() { return binary_chain(&Parser::bit_or, {"&&"}); }
  AstNode bit_or() { return binary_chain(&Parser::bit_xor, {"|"}); }
  AstNode bit_xor() { return binary_chain(&Parser::bit_and, {"^"}); }
  AstNode bit_and() { return binary_chain(&Parser::equality, {"&"}); }
  AstNode equality() { return binary_chain(&Parser::relational, {"==", "!="}); }

  AstNode relational() {
    AstNode lhs = additive();
    for (;;) {
      if (at_op("<") || at_op("<=") || at_op(">") || at_op(">=")) {
        std::string op = toks_[pos_++].text;
        AstNode rhs = additive();
        std::vector<AstNode> kids;
        kids.push_back(std::move(lhs));
        kids.push_back(std::move(rhs));
        lhs = make_node(NodeKind::BinaryExpression, std::move(kids), std::move(op));
        continue;
      }
      if (at_keyword("is")) {
        ++pos_;
        if (peek().kind != TokenKind::Identifier)
          throw ParseError("expected type name after 'is'", pos_);
        AstNode type = make_leaf(NodeKind::NameExpression, toks_[pos_++].text);
        std::vector<AstNode> kids;
        kids.push_back(std::move(lhs));
        kids.push_back(std::move(type));
        if (peek().kind == TokenKind::Identifier) {
          kids.push_back(make_leaf(NodeKind::NameExpression, toks_[pos_++].text));
          lhs = make_node(NodeKind::PatternMatch, std::move(kids));
        } else {
          lhs = make_node(NodeKind::BinaryExpression, std::move(kids), "is");
        }
        continue;
      }
      return lhs;
    }
  }

  AstNode additive() { return binary_chain(&Parser::multiplicative, {"+", "-"}); }
  AstNode multiplicative() { return binary_chain(&Parser::unary, {"*", "/", "%"}); }

  AstNode unary() {
    if (at_op("!") || at_op("-") || at_op("+") || at_op("~")) {
      std::string op = toks_[pos_++].text;
      std::vector<AstNode> kids;
      kids.push_back(unary());
      return make_node(NodeKind::UnaryExpression, std::move(kids), std::move(op));
    }
    return postfix();
  }

  AstNode postfix() {
    AstNode cur = primary();
    for (;;) {
      if (at_punct(".") || at_op("?.")) {
        NodeKind access =
            at_punct(".") ? NodeKind::MemberAccess : NodeKind::ConditionalAccess;
        ++pos_;
        if (peek().kind != TokenKind::Identifier)
          throw ParseError("expected member name after access operator", pos_);
        AstNode member = make_leaf(NodeKind::NameExpression, toks_[pos_++].text);
        std::vector<AstNode> kids;
        kids.push_back(std::move(cur));
        kids.push_back(std::move(member));
        cur = make_node(access, std::move(kids));
        continue;
      }
      if (at_punct("(")) {
        ++pos_;
        std::vector<AstNode> kids;
        kids.push_back(std::move(cur));
        if (!at_punct(")")) {
          kids.push_back(expression());
          while (at_punct(",")) {
            ++pos_;
            kids.push_back(expression());
          }
        }
        expect(TokenKind::Punctuation, ")", "')' closing argument list");
        cur = make_node(NodeKind::MethodCallExpression, std::move(kids));
        continue;
      }
      return cur;
    }
  }

  // '(' Type ')' operand is a cast when Type starts uppercase and an operand
  // follows; every other '(' is grouping.
  bool cast_ahead() const {
    if (!(peek(1).kind == TokenKind::Identifier && !peek(1).text.empty() &&
          std::isupper(static_cast<unsigned char>(peek(1).text[0])) &&
          peek(2).kind == TokenKind::Punctuation && peek(2).text == ")"))
      return false;
    const Token& after = peek(3);
    switch (after.kind) {
      case TokenKind::Identifier:
      case TokenKind::IntLiteral:
      case TokenKind::FloatLiteral:
      case TokenKind::StringLiteral:
      case TokenKind::BoolLiteral:
        return true;
      case TokenKind::Keyword:
        return after.text == "null";
      case TokenKind::Punctuation:
        return after.text == "(";
      case TokenKind::Operator:
        return after.text == "!" || after.text == "~";
    }
    return false;
  }

  AstNode primary() {
    if (done()) throw ParseError("unexpected end of input", pos_);
    const Token& t = toks_[pos_];
    switch (t.kind) {
      case TokenKind::IntLiteral:
      case TokenKind::FloatLiteral:
      case TokenKind::StringLiteral:
      case TokenKind::BoolLiteral:
        ++pos_;
        return make_leaf(NodeKind::Literal, t.text);
      case TokenKind::Keyword:
        if (t.text == "null") {
          ++pos_;
          return make_leaf(NodeKind::Literal, t.text);
        }
        throw ParseError("keyword cannot start an expression here", pos_);
      case TokenKind::Identifier:
        ++pos_;
        return make_leaf(NodeKind::NameExpression, t.text);
      case TokenKind::Punctuation:
        if (t.text == "(") {
          if (cast_ahead()) {
            ++pos_;
            AstNode type = make_leaf(NodeKind::NameExpression, toks_[pos_++].text);
            ++pos_;  // ')'
            AstNode operand = unary();
            std::vector<AstNode> kids;
            kids.push_back(std::move(type));
            kids.push_back(std::move(operand));
            return make_node(NodeKind::CastExpression, std::move(kids));
          }
          ++pos_;
          AstNode inner = expression();
          expect(TokenKind::Punctuation, ")", "')' closing parenthesized expression");
          std::vector<AstNode> kids;
          kids.push_back(std::move(inner));
          return make_node(NodeKind::ParenthesizedExpression, std::move(kids));
        }
        throw ParseError("unexpected punctuation in expression", pos_);
      case TokenKind::Operator:
        throw ParseError("unexpected operator in expression", pos_);
    }
    throw ParseError("unexpected token", pos_);
  }
};

void print_expr(const AstNode& n, std::string& out);

void print_statement(const AstNode& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::Block: {
      out += "{";
      for (const AstNode& s : n.children) {
        out += " ";
        print_statement(s, out);
      }
      out += " }";
      return;
    }
    case NodeKind::IfCondition: {
      out += "if (";
      print_expr(n.children[0], out);
      out += ")";
      if (n.children.size() > 1) {
        out += " ";
        print_statement(n.children[1], out);
      } else {
        out += ";";  // keeps a body-less if from capturing the next statement
      }
      return;
    }
    case NodeKind::PropertyDeclaration: {
      print_expr(n.children[0], out);
      out += " ";
      print_expr(n.children[1], out);
      out += " {";
      if (n.children.size() == 2) {
        out += " get; set;";
      } else {
        out += " get ";
        print_statement(n.children[2], out);
        out += " set ";
        print_statement(n.children[3], out);
      }
      out += " }";
      return;
    }
    default:
      print_expr(n, out);
      out += ";";
      return;
  }
}

void print_expr(const AstNode& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::NameExpression:
    case NodeKind::Literal:
      out += n.terminal.value_or("");
      return;
    case NodeKind::MethodCallExpression: {
      print_expr(n.children[0], out);
      out += "(";
      for (std::size_t i = 1; i < n.children.size(); ++i) {
        if (i > 1) out += ", ";
        print_expr(n.children[i], out);
      }
      out += ")";
      return;
    }
    case NodeKind::MemberAccess:
      print_expr(n.children[0], out);
      out += ".";
      print_expr(n.children[1], out);
      return;
    case NodeKind::ConditionalAccess:
      print_expr(n.children[0], out);
      out += "?.";
      print_expr(n.children[1], out);
      return;
    case NodeKind::BinaryExpression:
      print_expr(n.children[0], out);
      out += " " + n.op + " ";
      print_expr(n.children[1], out);
      return;
    case NodeKind::PatternMatch:
      print_expr(n.children[0], out);
      out += " is ";
      print_expr(n.children[1], out);
      out += " ";
      print_expr(n.children[2], out);
      return;
    case NodeKind::UnaryExpression:
      out += n.op;
      print_expr(n.children[0], out);
      return;
    case NodeKind::Assignment:
      print_expr(n.children[0], out);
      out += " = ";
      print_expr(n.children[1], out);
      return;
    case NodeKind::ParenthesizedExpression:
      out += "(";
      print_expr(n.children[0], out);
      out += ")";
      return;
    case NodeKind::CastExpression:
      out += "(";
      print_expr(n.children[0], out);
      out += ")";
      print_expr(n.children[1], out);
      return;
    case NodeKind::ArgumentList: {
      out += "(";
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i > 0) out += ", ";
        print_expr(n.children[i], out);
      }
      out += ")";
      return;
    }
    case NodeKind::Block:
    case NodeKind::IfCondition:
    case NodeKind::PropertyDeclaration:
      print_statement(n, out);
      return;
  }
}

}  // namespace

AstNode parse(const std::vector<Token>& tokens) { return Parser(tokens).run(); }

AstNode parse_source(std::string_view source) { return parse(tokenize(source)); }

std::string pretty_print(const AstNode& root) {
  std::string out;
  if (root.kind == NodeKind::Block || root.kind == NodeKind::IfCondition ||
      root.kind == NodeKind::PropertyDeclaration) {
    print_statement(root, out);
  } else {
    print_expr(root, out);
    out += ";";
  }
  return out;
}

namespace {
void collect_terminals(const AstNode& n, std::vector<const AstNode*>& out) {
  if (n.is_leaf()) {
    out.push_back(&n);
    return;
  }
  for (const AstNode& c : n.children) collect_terminals(c, out);
}
}  // namespace

std::vector<const AstNode*> terminals(const AstNode& root) {
  std::vector<const AstNode*> out;
  collect_terminals(root, out);
  return out;
}

}  // namespace editvec::minilang
