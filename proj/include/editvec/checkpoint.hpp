#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "editvec/nncore.hpp"

namespace editvec::checkpoint {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat binary container of named arrays: magic, count, then per array the
// name, shape and row-major 64-bit values. Little-endian.
void write_arrays(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, const nn::Tensor*>>& arrays);

std::map<std::string, nn::Tensor> read_arrays(const std::filesystem::path& path);

// FNV-1a over the sorted entries of a string->id map; recorded in the
// checkpoint sidecar so vocabulary mismatches are detectable.
std::uint64_t vocab_hash(const std::map<std::string, int>& vocab);
std::uint64_t vocab_hash(const std::unordered_map<std::string, int>& vocab);

}  // namespace editvec::checkpoint
