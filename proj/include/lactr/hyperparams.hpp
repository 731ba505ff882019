#pragma once

#include <cmath>
#include <string>

#include "lactr/common.hpp"

namespace lactr {

enum class ThetaMode { kOptimize, kFrozen };

inline std::string to_string(ThetaMode m) { return m == ThetaMode::kOptimize ? "optimize" : "frozen"; }

inline ThetaMode parse_theta_mode(const std::string& s) {
  if (s == "optimize") return ThetaMode::kOptimize;
  if (s == "frozen") return ThetaMode::kFrozen;
  throw InputError("theta_mode must be 'optimize' or 'frozen', got '" + s + "'");
}

// Defaults are the best values from a grid search on social voting data.
struct Hyperparams {
  std::size_t k = 200;
  double lambda_u = 0.01;
  double lambda_v = 100.0;
  double lambda_s = 0.01;
  double lambda_phi = 1.0;
  double a_r = 1.0;
  double b_r = 0.01;
  double a_phi = 1.0;
  double b_phi = 0.01;
  ThetaMode theta_mode = ThetaMode::kOptimize;
  std::size_t max_sweeps = 100;
  double tol = 1e-6;

  void validate() const {
    auto positive = [](double x) { return std::isfinite(x) && x > 0; };
    if (k == 0) throw InputError("k must be at least 1");
    if (!positive(lambda_u) || !positive(lambda_v) || !positive(lambda_s) || !positive(lambda_phi))
      throw InputError("all precision parameters (lambda_*) must be positive");
    if (!(positive(b_r) && a_r > b_r))
      throw InputError("rating confidences must satisfy a_r > b_r > 0");
    if (!(positive(b_phi) && a_phi > b_phi))
      throw InputError("attention confidences must satisfy a_phi > b_phi > 0");
    if (!(tol >= 0)) throw InputError("tol must be non-negative");
  }
};

}  // namespace lactr
