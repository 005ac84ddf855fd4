#include "editvec/pathctx.hpp"

#include <algorithm>
#include <cctype>

#include "editvec/rng.hpp"

namespace editvec::pathctx {

using minilang::AstNode;

namespace {

void collect_chains(const AstNode& node, std::vector<const AstNode*>& stack,
                    std::vector<std::vector<const AstNode*>>& chains) {
  stack.push_back(&node);
  if (node.is_leaf()) {
    chains.push_back(stack);
  } else {
    for (const AstNode& c : node.children) collect_chains(c, stack, chains);
  }
  stack.pop_back();
}

std::string label_of(const AstNode& n, bool with_index) {
  std::string s(minilang::node_kind_name(n.kind));
  if (!n.op.empty()) s += "(" + n.op + ")";  // operator-carrying kinds stay distinct
  if (with_index) s += std::to_string(n.sibling_index);
  return s;
}

}  // namespace

std::vector<PathContext> extract_path_contexts(const AstNode& ast) {
  std::vector<std::vector<const AstNode*>> chains;  // root..leaf, in source order
  std::vector<const AstNode*> stack;
  collect_chains(ast, stack, chains);

  std::vector<PathContext> out;
  const std::size_t n = chains.size();
  if (n < 2) return out;
  out.reserve(n * (n - 1) / 2);

  for (std::size_t a = 0; a + 1 < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto& left = chains[a];
      const auto& right = chains[b];
      std::size_t lca = 0;
      while (lca + 1 < left.size() && lca + 1 < right.size() &&
             left[lca + 1] == right[lca + 1])
        ++lca;

      PathContext ctx;
      ctx.left_subtokens = split_subtokens(*left.back()->terminal);
      ctx.right_subtokens = split_subtokens(*right.back()->terminal);
      for (std::size_t i = left.size(); i-- > lca + 1;)
        ctx.path_labels.push_back(label_of(*left[i], true));
      ctx.path_labels.push_back(label_of(*left[lca], false));
      for (std::size_t i = lca + 1; i < right.size(); ++i)
        ctx.path_labels.push_back(label_of(*right[i], true));
      out.push_back(std::move(ctx));
    }
  }
  return out;
}

std::vector<std::string> split_subtokens(std::string_view token) {
  auto lower = [](char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  };
  auto is_upper = [](char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; };
  auto is_lower = [](char c) { return std::islower(static_cast<unsigned char>(c)) != 0; };
  auto is_alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
  auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };

  std::vector<std::string> pieces;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      pieces.push_back(cur);
      cur.clear();
    }
  };

  for (std::size_t i = 0; i < token.size(); ++i) {
    char c = token[i];
    if (c == '_') {
      flush();
      continue;
    }
    if (!cur.empty()) {
      char prev = token[i - 1] == '_' ? '\0' : token[i - 1];
      bool boundary = false;
      if (prev != '\0') {
        if (is_lower(prev) && is_upper(c)) boundary = true;          // camelCase
        if (is_alpha(prev) && is_digit(c)) boundary = true;          // letter -> digit
        if (is_digit(prev) && is_alpha(c)) boundary = true;          // digit -> letter
        if (is_upper(prev) && is_upper(c) && i + 1 < token.size() &&
            is_lower(token[i + 1]))
          boundary = true;  // URLParser -> URL | Parser
      }
      if (boundary) flush();
    }
    cur += lower(c);
  }
  flush();

  if (pieces.empty()) {
    std::string whole;
    for (char c : token) whole += lower(c);
    pieces.push_back(whole);
  }
  return pieces;
}

namespace {

std::vector<PathContext> apply_overflow(std::vector<PathContext> contexts,
                                        const char* side, int max_contexts,
                                        OverflowPolicy policy) {
  if (static_cast<int>(contexts.size()) <= max_contexts) return contexts;
  if (policy.kind == OverflowPolicy::Kind::Reject)
    throw TooManyContexts(side, contexts.size());

  // Uniform sample of max_contexts slots, kept in source order.
  Rng rng(policy.seed);
  std::vector<std::size_t> idx(contexts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  idx.resize(static_cast<std::size_t>(max_contexts));
  std::sort(idx.begin(), idx.end());
  std::vector<PathContext> sampled;
  sampled.reserve(idx.size());
  for (std::size_t i : idx) sampled.push_back(std::move(contexts[i]));
  return sampled;
}

}  // namespace

EditPathContexts encode_edit(const AstNode& old_ast, const AstNode& new_ast,
                             int max_contexts, OverflowPolicy policy) {
  EditPathContexts enc;
  enc.old_contexts =
      apply_overflow(extract_path_contexts(old_ast), "old", max_contexts, policy);
  enc.new_contexts =
      apply_overflow(extract_path_contexts(new_ast), "new", max_contexts, policy);
  for (std::size_t i = 0; i < enc.old_contexts.size(); ++i) enc.old_mask[i] = true;
  for (std::size_t i = 0; i < enc.new_contexts.size(); ++i) enc.new_mask[i] = true;
  return enc;
}

namespace {

// Insertion-ordered frequency counter so vocabulary ids are reproducible.
class OrderedCounter {
 public:
  void add(const std::string& s) {
    auto [it, inserted] = index_.try_emplace(s, order_.size());
    if (inserted)
      order_.push_back({s, 1});
    else
      ++order_[it->second].second;
  }

  void assign_ids(std::unordered_map<std::string, int>& out, int min_count) const {
    int next = 2;  // after PAD, UNK
    for (const auto& [s, count] : order_)
      if (count >= min_count) out.emplace(s, next++);
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::pair<std::string, int>> order_;
};

}  // namespace

Vocabulary build_vocabulary(std::span<const EditPathContexts> corpus,
                            std::span<const std::vector<std::string>> token_corpus,
                            int min_count) {
  OrderedCounter subtokens, labels, tokens;
  auto count_side = [&](const std::vector<PathContext>& side) {
    for (const PathContext& ctx : side) {
      for (const auto& s : ctx.left_subtokens) subtokens.add(s);
      for (const auto& s : ctx.right_subtokens) subtokens.add(s);
      for (const auto& l : ctx.path_labels) labels.add(l);
    }
  };
  for (const EditPathContexts& e : corpus) {
    count_side(e.old_contexts);
    count_side(e.new_contexts);
  }
  for (const auto& seq : token_corpus)
    for (const auto& t : seq) tokens.add(t);

  Vocabulary v;
  subtokens.assign_ids(v.subtoken_to_id, min_count);
  labels.assign_ids(v.pathlabel_to_id, min_count);
  tokens.assign_ids(v.token_to_id, min_count);
  return v;
}

}  // namespace editvec::pathctx
