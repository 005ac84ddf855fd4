#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace editvec::eval {

struct PerplexityTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TsneOptions {
  double perplexity = 30.0;
  int iterations = 1000;
  std::uint64_t seed = 0;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
  double learning_rate = 200.0;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch = 250;
};

// Exact O(N^2) t-SNE: perplexity-calibrated Gaussian affinities,
// Student-t low-dimensional kernel, gradient descent with early
// exaggeration. Deterministic given the seed. N must be <= 5000 and
// perplexity < (N-1)/3.
std::vector<std::array<double, 2>> tsne_project(
    const std::vector<std::vector<double>>& vectors, const TsneOptions& options = {});

// Conditional affinities p_{j|i} (row-stochastic, zero diagonal), exposed
// for property tests. d2 is the N x N squared-distance matrix.
std::vector<double> perplexity_affinities(const std::vector<double>& d2, std::size_t n,
                                          double perplexity);

}  // namespace editvec::eval
