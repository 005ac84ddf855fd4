#pragma once

#include <string>
#include <utility>
#include <vector>

#include "editvec/data.hpp"
#include "editvec/minilang.hpp"

namespace editvec::canon {

// Joint canonicalization of an edit pair: one mapping built over the
// concatenation old-then-new in first-appearance order. The k-th distinct
// identifier becomes "var{k}", integer literal "{k}", float literal the
// 0.001*k decimal, string literal "\"string{k}\"". Booleans, keywords,
// operators and punctuation are untouched. LexError propagates.
std::pair<std::string, std::string> canonicalize_pair(const std::string& old_source,
                                                      const std::string& new_source);

data::CodeEdit canonicalize_edit(const data::CodeEdit& edit);

data::Dataset canonicalize_dataset(const data::Dataset& dataset);

// Token-stream renderer used for canonical output (spacing is cosmetic;
// comparisons are modulo whitespace).
std::string render_tokens(const std::vector<minilang::Token>& tokens);

}  // namespace editvec::canon
