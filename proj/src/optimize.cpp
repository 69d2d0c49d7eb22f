#include "qrepeater/optimize.hpp"

#include "qrepeater/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace qrep {

MinimizeResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                           const NelderMeadOptions& opt) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> val(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) pts[i + 1](i) += opt.initial_step;
  for (Eigen::Index i = 0; i <= n; ++i) val[i] = f(pts[i]);

  std::vector<std::size_t> order(n + 1);
  MinimizeResult res;
  for (int it = 0; it < opt.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return val[a] < val[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    res.iterations = it;
    if (val[worst] - val[best] <= opt.tolerance) {
      // Also require a small simplex so a flat start does not stop early.
      double size = 0;
      for (const auto& p : pts) size = std::max(size, (p - pts[best]).cwiseAbs().maxCoeff());
      if (size < 1e-6) {
        res.converged = true;
        break;
      }
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i)
      if (i != worst) centroid += pts[i];
    centroid /= double(n);

    const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = f(xr);
    if (fr < val[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(xe);
      if (fe < fr) {
        pts[worst] = xe;
        val[worst] = fe;
      } else {
        pts[worst] = xr;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = xr;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    const Eigen::VectorXd xc =
        outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = f(xc);
    if (fc < (outside ? fr : val[worst])) {
      pts[worst] = xc;
      val[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      val[i] = f(pts[i]);
    }
  }
  const auto best = std::min_element(val.begin(), val.end()) - val.begin();
  res.x = pts[best];
  res.value = val[best];
  return res;
}

MinimizeResult multistart_minimize(const Objective& f, const Eigen::VectorXd& x0, int restarts,
                                   std::uint64_t seed, const NelderMeadOptions& opt) {
  restarts = std::max(restarts, 1);
  std::vector<MinimizeResult> results(restarts);
  parallel_for(restarts, [&](std::size_t r) {
    Eigen::VectorXd start = x0;
    if (r > 0) {
      auto rng = substream(seed, r);
      std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
      for (Eigen::Index i = 0; i < start.size(); ++i) start(i) = u(rng);
    }
    // Polish with a second simplex started at the first optimum.
    MinimizeResult a = nelder_mead(f, start, opt);
    NelderMeadOptions fine = opt;
    fine.initial_step = 0.05;
    MinimizeResult b = nelder_mead(f, a.x, fine);
    b.iterations += a.iterations;
    results[r] = b.value <= a.value ? b : a;
  });
  return *std::min_element(results.begin(), results.end(),
                           [](const auto& a, const auto& b) { return a.value < b.value; });
}

}  // namespace qrep
