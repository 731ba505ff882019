#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "lactr/common.hpp"
#include "lactr/corpus.hpp"

namespace lactr {

// Euclidean projection onto the probability simplex (sort-and-threshold).
inline Vector project_to_simplex(const Vector& x) {
  const auto k = x.size();
  std::vector<double> sorted(x.data(), x.data() + k);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0;
  double tau = 0;
  for (Eigen::Index r = 0; r < k; ++r) {
    cumulative += sorted[static_cast<std::size_t>(r)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(r + 1);
    if (sorted[static_cast<std::size_t>(r)] - candidate > 0) tau = candidate;
  }
  Vector out = (x.array() - tau).cwiseMax(0.0);
  const double total = out.sum();
  if (total > 0) out /= total;
  return out;
}

// Per-item objective for the topic proportions:
//   f(theta) = sum_w n_w log(theta . beta_w) - lambda_v/2 |v - theta|^2
// which equals the Jensen bound evaluated at its optimal responsibilities.
class ThetaObjective {
 public:
  ThetaObjective(const Document& doc, const Matrix& beta, const Vector& v, double lambda_v)
      : doc_(doc), beta_(beta), v_(v), lambda_v_(lambda_v) {}

  double value(const Vector& theta) const {
    double f = -0.5 * lambda_v_ * (v_ - theta).squaredNorm();
    for (const auto& wc : doc_.counts) {
      const double mix = beta_.col(wc.word).dot(theta);
      if (!(mix > 0)) return -std::numeric_limits<double>::infinity();
      f += static_cast<double>(wc.count) * std::log(mix);
    }
    return f;
  }

  Vector gradient(const Vector& theta) const {
    Vector g = lambda_v_ * (v_ - theta);
    for (const auto& wc : doc_.counts) {
      const double mix = beta_.col(wc.word).dot(theta);
      g += (static_cast<double>(wc.count) / mix) * beta_.col(wc.word);
    }
    return g;
  }

 private:
  const Document& doc_;
  const Matrix& beta_;
  const Vector& v_;
  double lambda_v_;
};

struct SimplexAscentOptions {
  std::size_t max_iters = 200;
  double armijo = 1e-4;
  double initial_step = 1.0;
  double min_step = 1e-20;
  double rel_tol = 1e-14;
};

// Projected gradient ascent with backtracking. Every accepted step satisfies
// the Armijo condition, so the objective never decreases; when no ascent
// step exists the start point is returned unchanged.
inline Vector maximize_on_simplex(const ThetaObjective& objective, const Vector& start,
                                  const SimplexAscentOptions& opt = {}) {
  Vector theta = start;
  double f = objective.value(theta);
  if (!std::isfinite(f)) return theta;
  double step = opt.initial_step;
  for (std::size_t it = 0; it < opt.max_iters; ++it) {
    const Vector g = objective.gradient(theta);
    bool accepted = false;
    Vector candidate;
    double f_candidate = 0;
    while (step >= opt.min_step) {
      candidate = project_to_simplex(theta + step * g);
      const Vector delta = candidate - theta;
      if (delta.cwiseAbs().maxCoeff() == 0) break;
      f_candidate = objective.value(candidate);
      if (std::isfinite(f_candidate) && f_candidate >= f + opt.armijo * g.dot(delta) &&
          f_candidate >= f) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double gain = f_candidate - f;
    theta = candidate;
    f = f_candidate;
    step *= 2.0;
    if (gain <= opt.rel_tol * std::max(1.0, std::abs(f))) break;
  }
  return theta;
}

}  // namespace lactr
