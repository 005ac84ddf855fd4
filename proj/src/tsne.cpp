#include "editvec/tsne.hpp"

#include <algorithm>
#include <cmath>

#include "editvec/rng.hpp"

namespace editvec::eval {

std::vector<double> perplexity_affinities(const std::vector<double>& d2, std::size_t n,
                                          double perplexity) {
  const double target_entropy = std::log(perplexity);
  std::vector<double> p(n * n, 0.0);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    double beta = 1.0, beta_min = -1e300, beta_max = 1e300;
    for (int iter = 0; iter < 64; ++iter) {
      double sum = 0.0;
      double weighted = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) {
          row[j] = 0.0;
          continue;
        }
        row[j] = std::exp(-beta * d2[i * n + j]);
        sum += row[j];
        weighted += beta * d2[i * n + j] * row[j];
      }
      // entropy of the conditional distribution
      double h = std::log(sum) + weighted / sum;
      double diff = h - target_entropy;
      if (std::fabs(diff) < 1e-7) break;
      if (diff > 0.0) {
        beta_min = beta;
        beta = beta_max >= 1e300 ? beta * 2.0 : (beta + beta_max) / 2.0;
      } else {
        beta_max = beta;
        beta = beta_min <= -1e300 ? beta / 2.0 : (beta + beta_min) / 2.0;
      }
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += row[j];
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] = j == i ? 0.0 : row[j] / sum;
  }
  return p;
}

std::vector<std::array<double, 2>> tsne_project(
    const std::vector<std::vector<double>>& vectors, const TsneOptions& options) {
  const std::size_t n = vectors.size();
  if (n > 5000) throw std::invalid_argument("exact t-SNE is limited to 5000 points");
  if (n < 2) throw PerplexityTooLarge("need at least 2 points");
  if (options.perplexity >= static_cast<double>(n - 1) / 3.0)
    throw PerplexityTooLarge("perplexity " + std::to_string(options.perplexity) +
                             " too large for " + std::to_string(n) + " points");

  const std::size_t d = vectors[0].size();
  std::vector<double> d2(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = vectors[i][k] - vectors[j][k];
        s += diff * diff;
      }
      d2[i * n + j] = s;
      d2[j * n + i] = s;
    }

  // symmetrized joint affinities
  std::vector<double> cond = perplexity_affinities(d2, n, options.perplexity);
  std::vector<double> p(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      p[i * n + j] =
          std::max((cond[i * n + j] + cond[j * n + i]) / (2.0 * static_cast<double>(n)),
                   1e-12);

  Rng rng(options.seed);
  std::vector<std::array<double, 2>> y(n), dy(n, {0.0, 0.0}), inc(n, {0.0, 0.0});
  std::vector<std::array<double, 2>> gains(n, {1.0, 1.0});
  for (auto& pt : y) {
    pt[0] = rng.normal() * 1e-4;
    pt[1] = rng.normal() * 1e-4;
  }

  std::vector<double> q(n * n);
  for (int iter = 0; iter < options.iterations; ++iter) {
    const double exaggeration =
        iter < options.exaggeration_iters ? options.early_exaggeration : 1.0;
    const double momentum =
        iter < options.momentum_switch ? options.initial_momentum : options.final_momentum;

    double qsum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = y[i][0] - y[j][0];
        const double dyv = y[i][1] - y[j][1];
        const double num = 1.0 / (1.0 + dx * dx + dyv * dyv);
        q[i * n + j] = num;
        q[j * n + i] = num;
        qsum += 2.0 * num;
      }

    for (std::size_t i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double num = q[i * n + j];
        const double qij = std::max(num / qsum, 1e-12);
        const double mult = (exaggeration * p[i * n + j] - qij) * num;
        gx += mult * (y[i][0] - y[j][0]);
        gy += mult * (y[i][1] - y[j][1]);
      }
      dy[i][0] = 4.0 * gx;
      dy[i][1] = 4.0 * gy;
    }

    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < 2; ++c) {
        const bool same_sign = (dy[i][c] > 0.0) == (inc[i][c] > 0.0);
        gains[i][c] = same_sign ? gains[i][c] * 0.8 : gains[i][c] + 0.2;
        gains[i][c] = std::max(gains[i][c], 0.01);
        inc[i][c] = momentum * inc[i][c] - options.learning_rate * gains[i][c] * dy[i][c];
        y[i][c] += inc[i][c];
      }
    }

    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& pt : y) {
      mean_x += pt[0];
      mean_y += pt[1];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    for (auto& pt : y) {
      pt[0] -= mean_x;
      pt[1] -= mean_y;
    }
  }
  return y;
}

}  // namespace editvec::eval
