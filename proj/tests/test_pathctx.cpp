#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "editvec/minilang.hpp"
#include "editvec/pathctx.hpp"
#include "editvec/rng.hpp"
#include "support/ast_gen.hpp"
#include "support/oracles.hpp"

using namespace editvec;
using namespace editvec::pathctx;
using minilang::parse_source;

TEST_CASE("paper golden: processURL(message, depth, baseURL, url)") {
  auto contexts = extract_path_contexts(parse_source("processURL(message, depth, baseURL, url)"));
  // 5 terminals -> 10 pairs
  REQUIRE(contexts.size() == 10);

  // (processURL, baseURL) is pair index: left=0 with rights 1,2,3,4 -> third
  const PathContext& ctx = contexts[2];
  CHECK(ctx.left_subtokens == std::vector<std::string>{"process", "url"});
  CHECK(ctx.path_labels == std::vector<std::string>{"NameExpression0",
                                                    "MethodCallExpression",
                                                    "NameExpression3"});
  CHECK(ctx.right_subtokens == std::vector<std::string>{"base", "url"});

  // the edited side moves baseURL to index 4
  auto edited = extract_path_contexts(parse_source("processURL(message, depth, url, baseURL)"));
  const PathContext& moved = edited[3];  // (processURL, baseURL) now the fourth right
  CHECK(moved.right_subtokens == std::vector<std::string>{"base", "url"});
  CHECK(moved.path_labels == std::vector<std::string>{"NameExpression0",
                                                      "MethodCallExpression",
                                                      "NameExpression4"});
}

TEST_CASE("single terminal yields no contexts") {
  CHECK(extract_path_contexts(parse_source("x")).empty());
}

TEST_CASE("pair-count law against the BFS oracle on random trees") {
  Rng rng(20240801);
  for (int i = 0; i < 100; ++i) {
    auto ast = test_gen::random_program(rng, 5);
    auto contexts = extract_path_contexts(ast);
    auto oracle = test_oracles::bfs_all_paths(ast);
    const std::size_t n = minilang::terminals(ast).size();
    REQUIRE(contexts.size() == n * (n - 1) / 2);
    REQUIRE(contexts.size() == oracle.size());
    for (std::size_t p = 0; p < contexts.size(); ++p) {
      CHECK(contexts[p].path_labels == oracle[p].labels);
      CHECK(contexts[p].left_subtokens == split_subtokens(oracle[p].left_terminal));
      CHECK(contexts[p].right_subtokens == split_subtokens(oracle[p].right_terminal));
    }
  }
}

TEST_CASE("path symmetry: canonical order puts the left terminal first") {
  auto ast = parse_source("f(alpha, beta)");
  auto contexts = extract_path_contexts(ast);
  auto term = minilang::terminals(ast);
  // left terminals appear in strictly earlier source positions than rights
  for (const auto& ctx : contexts) {
    auto left_pos = std::find_if(term.begin(), term.end(), [&](const minilang::AstNode* t) {
      return split_subtokens(*t->terminal) == ctx.left_subtokens;
    });
    auto right_pos = std::find_if(term.begin(), term.end(), [&](const minilang::AstNode* t) {
      return split_subtokens(*t->terminal) == ctx.right_subtokens;
    });
    CHECK(left_pos < right_pos);
  }
}

TEST_CASE("sub-token splitting") {
  CHECK(split_subtokens("processURL") == std::vector<std::string>{"process", "url"});
  CHECK(split_subtokens("x") == std::vector<std::string>{"x"});
  CHECK(split_subtokens("get_id2Name") ==
        std::vector<std::string>{"get", "id", "2", "name"});
  CHECK(split_subtokens("URLParser") == std::vector<std::string>{"url", "parser"});
  CHECK(split_subtokens("_") == std::vector<std::string>{"_"});
  CHECK(split_subtokens("3000") == std::vector<std::string>{"3000"});
}

TEST_CASE("sub-token idempotence") {
  Rng rng(7);
  const char* samples[] = {"waitForJobExecutor", "AtmResponse", "toDecodedString",
                           "get_id2Name", "maxSize2", "\"alpha\""};
  for (const char* s : samples)
    for (const auto& piece : split_subtokens(s)) {
      CAPTURE(piece);
      CHECK(split_subtokens(piece) == std::vector<std::string>{piece});
    }
  (void)rng;
}

TEST_CASE("encode_edit pads and masks") {
  auto identity = encode_edit(parse_source("x"), parse_source("x"));
  CHECK(identity.old_contexts.empty());
  CHECK(identity.new_contexts.empty());
  for (bool m : identity.old_mask) CHECK_FALSE(m);
  for (bool m : identity.new_mask) CHECK_FALSE(m);

  // 5 terminals -> 10 contexts, 6 terminals -> 15
  auto enc = encode_edit(parse_source("f(a, b, c, d)"), parse_source("f(a, b, c, d, e)"));
  CHECK(enc.old_contexts.size() == 10);
  CHECK(enc.new_contexts.size() == 15);
  int old_real = 0, new_real = 0;
  for (bool m : enc.old_mask) old_real += m ? 1 : 0;
  for (bool m : enc.new_mask) new_real += m ? 1 : 0;
  CHECK(old_real == 10);
  CHECK(new_real == 15);
  for (int i = 0; i < 10; ++i) CHECK(enc.old_mask[static_cast<std::size_t>(i)]);
}

TEST_CASE("overflow policies") {
  // 10 terminals -> 45 contexts > 40
  const char* big = "f(a1, a2, a3, a4, a5, a6, a7, a8, a9)";
  CHECK_THROWS_AS(encode_edit(parse_source(big), parse_source("x")), TooManyContexts);
  try {
    encode_edit(parse_source(big), parse_source("x"));
  } catch (const TooManyContexts& e) {
    CHECK(e.side == "old");
    CHECK(e.count == 45);
  }

  auto sampled = encode_edit(parse_source(big), parse_source(big), kMaxContexts,
                             OverflowPolicy::sample_random(99));
  CHECK(sampled.old_contexts.size() == 40);
  auto sampled_again = encode_edit(parse_source(big), parse_source(big), kMaxContexts,
                                   OverflowPolicy::sample_random(99));
  CHECK(sampled.old_contexts == sampled_again.old_contexts);
}

TEST_CASE("vocabulary thresholds and reserved ids") {
  Vocabulary empty = build_vocabulary({}, {}, 1);
  CHECK(empty.subtoken_count() == 2);  // PAD + UNK only
  CHECK(empty.token_count() == 2);
  CHECK(empty.subtoken_id("anything") == Vocabulary::kUnk);

  std::vector<std::vector<std::string>> tokens = {{"a", "a", "b"}, {"a", "a", "a"}};
  Vocabulary v = build_vocabulary({}, tokens, 2);
  CHECK(v.token_id("a") >= 2);
  CHECK(v.token_id("b") == Vocabulary::kUnk);
}

TEST_CASE("vocabulary id count equals distinct strings plus reserved") {
  Rng rng(123);
  std::vector<EditPathContexts> corpus;
  std::set<std::string> distinct_sub, distinct_label;
  for (int i = 0; i < 50; ++i) {
    auto ast = test_gen::random_program(rng, 4);
    auto terminals = minilang::terminals(ast);
    if (terminals.size() < 2 || terminals.size() > 9) continue;
    auto enc = encode_edit(ast, ast);
    for (const auto& ctx : enc.old_contexts) {
      for (const auto& s : ctx.left_subtokens) distinct_sub.insert(s);
      for (const auto& s : ctx.right_subtokens) distinct_sub.insert(s);
      for (const auto& l : ctx.path_labels) distinct_label.insert(l);
    }
    corpus.push_back(std::move(enc));
  }
  Vocabulary v = build_vocabulary(corpus, {}, 1);
  CHECK(v.subtoken_count() == distinct_sub.size() + 2);
  CHECK(v.pathlabel_count() == distinct_label.size() + 2);
}
