#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "editvec/minilang.hpp"

namespace editvec::pathctx {

inline constexpr int kMaxContexts = 40;

// One terminal-to-terminal path: sub-tokens of the left terminal, the
// labelled non-terminal sequence between them, sub-tokens of the right
// terminal. Left precedes right in source order.
struct PathContext {
  std::vector<std::string> left_subtokens;
  std::vector<std::string> path_labels;
  std::vector<std::string> right_subtokens;

  bool operator==(const PathContext&) const = default;
};

// Fixed-size per-edit bundle: up to kMaxContexts real contexts per side,
// real slots first, mask[i] true iff slot i is real.
struct EditPathContexts {
  std::vector<PathContext> old_contexts;
  std::vector<PathContext> new_contexts;
  std::array<bool, kMaxContexts> old_mask{};
  std::array<bool, kMaxContexts> new_mask{};
};

struct TooManyContexts : std::runtime_error {
  std::string side;
  std::size_t count;
  TooManyContexts(std::string side_, std::size_t count_)
      : std::runtime_error("side '" + side_ + "' has " + std::to_string(count_) +
                           " path-contexts (limit " + std::to_string(kMaxContexts) + ")"),
        side(std::move(side_)),
        count(count_) {}
};

struct OverflowPolicy {
  enum class Kind { Reject, SampleRandom } kind = Kind::Reject;
  std::uint64_t seed = 0;

  static OverflowPolicy reject() { return {}; }
  static OverflowPolicy sample_random(std::uint64_t seed) {
    return {Kind::SampleRandom, seed};
  }
};

// All n(n-1)/2 terminal-pair paths of the tree, ordered by source position
// of the left then the right terminal. Sibling indices label every path
// node except the lowest common ancestor.
std::vector<PathContext> extract_path_contexts(const minilang::AstNode& ast);

// camelCase / digit-boundary / underscore splitting, lowercased. Never empty.
std::vector<std::string> split_subtokens(std::string_view token);

EditPathContexts encode_edit(const minilang::AstNode& old_ast,
                             const minilang::AstNode& new_ast,
                             int max_contexts = kMaxContexts,
                             OverflowPolicy policy = OverflowPolicy::reject());

struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  std::unordered_map<std::string, int> subtoken_to_id;
  std::unordered_map<std::string, int> pathlabel_to_id;
  std::unordered_map<std::string, int> token_to_id;

  int subtoken_id(const std::string& s) const { return lookup(subtoken_to_id, s); }
  int pathlabel_id(const std::string& s) const { return lookup(pathlabel_to_id, s); }
  int token_id(const std::string& s) const { return lookup(token_to_id, s); }

  // Table sizes include the PAD and UNK rows.
  std::size_t subtoken_count() const { return subtoken_to_id.size() + 2; }
  std::size_t pathlabel_count() const { return pathlabel_to_id.size() + 2; }
  std::size_t token_count() const { return token_to_id.size() + 2; }

 private:
  static int lookup(const std::unordered_map<std::string, int>& m, const std::string& s) {
    auto it = m.find(s);
    return it == m.end() ? kUnk : it->second;
  }
};

// Frequency-thresholded vocabulary over training material only. Ids are
// assigned in first-appearance order starting at 2; PAD=0 and UNK=1 are
// never remapped.
Vocabulary build_vocabulary(std::span<const EditPathContexts> corpus,
                            std::span<const std::vector<std::string>> token_corpus,
                            int min_count = 1);

}  // namespace editvec::pathctx
