#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "editvec/minilang.hpp"
#include "editvec/rng.hpp"
#include "support/ast_gen.hpp"

using namespace editvec;
using namespace editvec::minilang;

namespace {
std::vector<std::string> texts(const std::vector<Token>& toks) {
  std::vector<std::string> out;
  for (const auto& t : toks) out.push_back(t.text);
  return out;
}
}  // namespace

TEST_CASE("tokenize member call statement") {
  auto toks = tokenize("url.toString();");
  REQUIRE(toks.size() == 6);
  CHECK(toks[0].kind == TokenKind::Identifier);
  CHECK(toks[0].text == "url");
  CHECK(toks[1].kind == TokenKind::Punctuation);
  CHECK(toks[1].text == ".");
  CHECK(toks[2].text == "toString");
  CHECK(toks[3].text == "(");
  CHECK(toks[4].text == ")");
  CHECK(toks[5].text == ";");
}

TEST_CASE("tokenize empty input") { CHECK(tokenize("").empty()); }

TEST_CASE("tokenize call with integer literals via maximal munch") {
  // hand enumeration: name, '(', 3000, ',', 500, ')'
  auto toks = tokenize("waitForJobExecutor(3000, 500)");
  REQUIRE(toks.size() == 6);
  CHECK(toks[0].text == "waitForJobExecutor");
  CHECK(toks[2].kind == TokenKind::IntLiteral);
  CHECK(toks[2].text == "3000");
  CHECK(toks[4].kind == TokenKind::IntLiteral);
  CHECK(toks[4].text == "500");
  CHECK(tokenize("waitForJobExecutor(3000, 500);").size() == 7);
}

TEST_CASE("token spans reconstruct the source") {
  const std::string src = "  if (maxCount <= 40) {\n  total = total + 1;\n}";
  auto toks = tokenize(src);
  std::string rebuilt(src.size(), ' ');
  for (const auto& t : toks)
    for (std::size_t i = t.begin; i < t.end; ++i) rebuilt[i] = src[i];
  std::string blanked = src;
  for (char& c : blanked)
    if (c == '\n' || c == '\t') c = ' ';
  CHECK(rebuilt == blanked);
  for (std::size_t i = 1; i < toks.size(); ++i) CHECK(toks[i].begin >= toks[i - 1].end);
}

TEST_CASE("lex errors carry byte offsets") {
  CHECK_THROWS_AS(tokenize("\xc2\xa7\xc2\xa7"), LexError);
  try {
    tokenize("ab @ cd");
  } catch (const LexError& e) {
    CHECK(e.offset == 3);
  }
  try {
    tokenize("\xc2\xa7");
  } catch (const LexError& e) {
    CHECK(e.offset == 0);
  }
}

TEST_CASE("float vs int literal lexing") {
  auto toks = tokenize("f(2.345, 42, 12.)");
  CHECK(toks[2].kind == TokenKind::FloatLiteral);
  CHECK(toks[2].text == "2.345");
  CHECK(toks[4].kind == TokenKind::IntLiteral);
  CHECK(toks[6].kind == TokenKind::IntLiteral);  // "12" then '.' as punctuation
  CHECK(toks[6].text == "12");
}

TEST_CASE("string and bool literals") {
  auto toks = tokenize("setName(\"Alice\", true)");
  CHECK(toks[2].kind == TokenKind::StringLiteral);
  CHECK(toks[2].text == "\"Alice\"");
  CHECK(toks[4].kind == TokenKind::BoolLiteral);
}

TEST_CASE("parse single identifier") {
  AstNode root = parse_source("x");
  CHECK(root.kind == NodeKind::NameExpression);
  REQUIRE(root.terminal.has_value());
  CHECK(*root.terminal == "x");
  CHECK(root.is_leaf());
}

TEST_CASE("parse flat call: five name children at sibling indices 0..4") {
  AstNode root = parse_source("processURL(message, depth, baseURL, url)");
  REQUIRE(root.kind == NodeKind::MethodCallExpression);
  REQUIRE(root.children.size() == 5);
  const char* expected[] = {"processURL", "message", "depth", "baseURL", "url"};
  for (int i = 0; i < 5; ++i) {
    CHECK(root.children[i].kind == NodeKind::NameExpression);
    CHECK(root.children[i].sibling_index == i);
    CHECK(*root.children[i].terminal == expected[i]);
  }
}

TEST_CASE("parse if condition over boolean comparison") {
  AstNode root = parse_source("if (var1 == false)");
  REQUIRE(root.kind == NodeKind::IfCondition);
  REQUIRE(root.children.size() == 1);
  const AstNode& cond = root.children[0];
  CHECK(cond.kind == NodeKind::BinaryExpression);
  CHECK(cond.op == "==");
  CHECK(cond.children[0].kind == NodeKind::NameExpression);
  CHECK(cond.children[1].kind == NodeKind::Literal);
  CHECK(*cond.children[1].terminal == "false");
}

TEST_CASE("operator precedence and associativity") {
  AstNode root = parse_source("a + b * c");
  REQUIRE(root.kind == NodeKind::BinaryExpression);
  CHECK(root.op == "+");
  CHECK(root.children[1].kind == NodeKind::BinaryExpression);
  CHECK(root.children[1].op == "*");

  AstNode left = parse_source("a - b + c");
  CHECK(left.op == "+");
  CHECK(left.children[0].op == "-");

  AstNode logical = parse_source("!done && ready");
  CHECK(logical.op == "&&");
  CHECK(logical.children[0].kind == NodeKind::UnaryExpression);
  CHECK(logical.children[0].op == "!");
}

TEST_CASE("member access chains and qualified calls") {
  AstNode chain = parse_source("a.b.c");
  REQUIRE(chain.kind == NodeKind::MemberAccess);
  CHECK(chain.children[0].kind == NodeKind::MemberAccess);

  AstNode call = parse_source("url.toString()");
  REQUIRE(call.kind == NodeKind::MethodCallExpression);
  REQUIRE(call.children.size() == 1);
  const AstNode& callee = call.children[0];
  REQUIRE(callee.kind == NodeKind::MemberAccess);
  CHECK(*callee.children[0].terminal == "url");
  CHECK(*callee.children[1].terminal == "toString");
}

TEST_CASE("conditional access parses like member access") {
  AstNode root = parse_source("var1?.var2()");
  REQUIRE(root.kind == NodeKind::MethodCallExpression);
  CHECK(root.children[0].kind == NodeKind::ConditionalAccess);
}

TEST_CASE("casts need an uppercase type and an operand") {
  AstNode cast = parse_source("(Response)body");
  REQUIRE(cast.kind == NodeKind::CastExpression);
  CHECK(*cast.children[0].terminal == "Response");
  CHECK(*cast.children[1].terminal == "body");

  AstNode grouped = parse_source("(body)");
  CHECK(grouped.kind == NodeKind::ParenthesizedExpression);

  AstNode upper_grouped = parse_source("(Response)");
  CHECK(upper_grouped.kind == NodeKind::ParenthesizedExpression);
}

TEST_CASE("pattern match versus is-check") {
  AstNode pm = parse_source("obj is Response response");
  REQUIRE(pm.kind == NodeKind::PatternMatch);
  REQUIRE(pm.children.size() == 3);
  CHECK(*pm.children[2].terminal == "response");

  AstNode check = parse_source("obj is Response");
  CHECK(check.kind == NodeKind::BinaryExpression);
  CHECK(check.op == "is");
}

TEST_CASE("property declarations") {
  AstNode auto_prop = parse_source("Int32 Count { get; set; }");
  REQUIRE(auto_prop.kind == NodeKind::PropertyDeclaration);
  CHECK(auto_prop.children.size() == 2);

  AstNode full = parse_source("Int32 Count { get { count; } set { count = value; } }");
  REQUIRE(full.kind == NodeKind::PropertyDeclaration);
  REQUIRE(full.children.size() == 4);
  CHECK(full.children[2].kind == NodeKind::Block);
  CHECK(full.children[3].kind == NodeKind::Block);
  CHECK(full.children[3].children[0].kind == NodeKind::Assignment);

  CHECK_THROWS_AS(parse_source("Int32 Count { get; set { count = value; } }"), ParseError);
}

TEST_CASE("blocks hold statements with sibling indices") {
  AstNode root = parse_source("{ x = getConfig(); f(x); }");
  REQUIRE(root.kind == NodeKind::Block);
  REQUIRE(root.children.size() == 2);
  CHECK(root.children[0].kind == NodeKind::Assignment);
  CHECK(root.children[0].sibling_index == 0);
  CHECK(root.children[1].kind == NodeKind::MethodCallExpression);
  CHECK(root.children[1].sibling_index == 1);
}

TEST_CASE("parse errors carry the offending token index") {
  CHECK_THROWS_AS(parse_source("f("), ParseError);
  CHECK_THROWS_AS(parse_source(")"), ParseError);
  CHECK_THROWS_AS(parse_source(""), ParseError);
  CHECK_THROWS_AS(parse_source("a b"), ParseError);  // trailing tokens
  try {
    parse_source("f(,)");
  } catch (const ParseError& e) {
    CHECK(e.token_index == 2);
  }
}

TEST_CASE("assignment targets are names or member accesses") {
  CHECK(parse_source("a.b = 1").kind == NodeKind::Assignment);
  CHECK_THROWS_AS(parse_source("f() = 1"), ParseError);
}

TEST_CASE("determinism: identical bytes give identical streams and trees") {
  const std::string src = "if (a < b) { f(x, 1); }";
  CHECK(texts(tokenize(src)) == texts(tokenize(src)));
  CHECK(parse_source(src) == parse_source(src));
}

TEST_CASE("round trip: parse(tokenize(pretty_print(ast))) == ast") {
  Rng rng(424242);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    AstNode ast = test_gen::random_program(rng, 6);
    std::string printed = pretty_print(ast);
    CAPTURE(printed);
    AstNode reparsed = parse_source(printed);
    CHECK(reparsed == ast);
    ++checked;
  }
  CHECK(checked == 400);
}

TEST_CASE("pretty print examples") {
  CHECK(pretty_print(parse_source("url.toString();")) == "url.toString();");
  CHECK(pretty_print(parse_source("if (a == b) f(x);")) == "if (a == b) f(x);");
  CHECK(pretty_print(parse_source("Int32 Count { get; set; }")) ==
        "Int32 Count { get; set; }");
}
