// Derivative-free minimization used by the rotation searches.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace qrep {

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0;
  int iterations = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  double initial_step = 0.5;
  double tolerance = 1e-8;  // spread of simplex values
  int max_iterations = 20000;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

MinimizeResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                           const NelderMeadOptions& opt = {});

// Nelder-Mead from `restarts` starting points; the first is x0 and the rest are
// uniform in [-pi, pi]^n drawn from a per-restart substream of `seed`. Restarts
// run in parallel; the result does not depend on the thread count.
MinimizeResult multistart_minimize(const Objective& f, const Eigen::VectorXd& x0, int restarts,
                                   std::uint64_t seed, const NelderMeadOptions& opt = {});

}  // namespace qrep
