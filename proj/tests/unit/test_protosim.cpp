#include <doctest.h>

#include "qrepeater/protosim.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>

using namespace qrep;

namespace {

struct ThreadsEnv {
  explicit ThreadsEnv(const char* n) { setenv("QREP_THREADS", n, 1); }
  ~ThreadsEnv() { unsetenv("QREP_THREADS"); }
};

// Probability that the pair survives: even number of phase flips among the
// fresh pair, the stored pair and the storage dephasing.
double even_flips(double a, double b, double c) {
  const double ab = a * (1 - b) + b * (1 - a);
  return 1 - (ab * (1 - c) + c * (1 - ab));
}

// Storage-time weights written out directly from the two arms.
std::vector<double> storage_weights_oracle(const ProtocolConfig& c) {
  const double both = c.p_A1 * c.p_B1;
  const double only_a = c.p_A1 * (1 - c.p_B1), only_b = c.p_B1 * (1 - c.p_A1);
  std::vector<double> w(c.loop2_max + 1, 0);
  w[0] = both;
  for (int k = 1; k <= c.loop2_max; ++k)
    w[k] = only_a * c.p_B2 * std::pow(1 - c.p_B2, k - 1) + only_b * c.p_A2 * std::pow(1 - c.p_A2, k - 1);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= s;
  return w;
}

}  // namespace

TEST_CASE("certain photons end every trial in Loop 1") {
  ProtocolConfig c;
  c.p_A1 = c.p_B1 = c.p_A2 = c.p_B2 = 1;
  const SimStats s = simulate_repeater(c, 1000, 1);
  CHECK(s.successes == 1000);
  CHECK(s.attempts == 1000);
  CHECK(s.loop2_entries == 0);
  CHECK(s.P_s == 1);
  const double per_trial = c.t_attempt_loop1 + c.t_wait + c.t_swap;
  CHECK(s.active_rate == doctest::Approx(1 / per_trial).epsilon(1e-12));
}

TEST_CASE("no photons means no successes") {
  ProtocolConfig c;
  c.p_A1 = c.p_B1 = c.p_A2 = c.p_B2 = 0;
  const SimStats s = simulate_repeater(c, 500, 1);
  CHECK(s.successes == 0);
  CHECK(s.attempts == 500u * c.loop1_max);
  CHECK(s.active_rate == 0);
}

TEST_CASE("invalid configurations are rejected") {
  ProtocolConfig c;
  c.p_A1 = 1.5;
  CHECK_THROWS_AS(simulate_repeater(c, 10, 0), std::invalid_argument);
  c = {};
  c.loop2_max = 0;
  CHECK_THROWS_AS(simulate_repeater(c, 10, 0), std::invalid_argument);
  c = {};
  CHECK_THROWS_AS(simulate_repeater(c, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(simulate_direct(c, 10, 0), std::invalid_argument);
}

TEST_CASE("results depend on the seed only, not on the thread count") {
  const ProtocolConfig c;
  SimStats one, four;
  {
    ThreadsEnv env("1");
    one = simulate_repeater(c, 200'000, 42);
  }
  {
    ThreadsEnv env("4");
    four = simulate_repeater(c, 200'000, 42);
  }
  CHECK(one.successes == four.successes);
  CHECK(one.attempts == four.attempts);
  CHECK(one.k_histogram == four.k_histogram);
  CHECK(one.active_time == four.active_time);
  const SimStats other = simulate_repeater(c, 200'000, 43);
  CHECK(other.attempts != one.attempts);
}

TEST_CASE("success probability per attempt agrees with the renewal model") {
  const ProtocolConfig c;
  const SimStats s = simulate_repeater(c, 1'000'000, 7);
  const RenewalStats r = renewal({c.p_A1, c.p_B1, c.p_A2, c.p_B2, c.loop2_max});
  const double rel_sigma = 1 / std::sqrt(double(s.successes));
  CHECK(std::abs(s.P_s / r.P_s - 1) < 3 * rel_sigma);
  const double p2_sigma = std::sqrt(r.P2 * (1 - r.P2) / double(s.loop2_entries));
  CHECK(std::abs(s.P2 - r.P2) < 3 * p2_sigma);
  CHECK(analytic_P2(c) == doctest::Approx(r.P2));
  CHECK(s.P2 == doctest::Approx(0.336).epsilon(0.03));
}

TEST_CASE("Loop-2 histogram follows the two-arm geometric law") {
  const ProtocolConfig c;
  const SimStats s = simulate_repeater(c, 1'000'000, 11);
  REQUIRE(s.k_histogram.size() <= std::size_t(c.loop2_max));
  CHECK(std::accumulate(s.k_histogram.begin(), s.k_histogram.end(), std::uint64_t{0}) == s.loop2_successes);

  const double only_a = c.p_A1 * (1 - c.p_B1), only_b = c.p_B1 * (1 - c.p_A1);
  const double fa = only_a / (only_a + only_b);
  auto expected = [&](int k) {
    return double(s.loop2_entries) *
           (fa * c.p_B2 * std::pow(1 - c.p_B2, k - 1) + (1 - fa) * c.p_A2 * std::pow(1 - c.p_A2, k - 1));
  };
  // Bins of 10 attempts, 3 sigma Poisson each.
  for (int lo = 1; lo <= c.loop2_max; lo += 10) {
    double exp_sum = 0, obs = 0;
    for (int k = lo; k < lo + 10 && k <= c.loop2_max; ++k) {
      exp_sum += expected(k);
      if (std::size_t(k - 1) < s.k_histogram.size()) obs += double(s.k_histogram[k - 1]);
    }
    CAPTURE(lo);
    CHECK(std::abs(obs - exp_sum) < 3 * std::sqrt(exp_sum));
  }
}

TEST_CASE("storage distribution matches the two-arm weights") {
  ProtocolConfig c;
  c.loop2_max = 50;
  const auto w = storage_distribution({c.p_A1, c.p_B1, c.p_A2, c.p_B2, c.loop2_max}, c.loop2_max);
  const auto o = storage_weights_oracle(c);
  REQUIRE(w.size() == o.size());
  for (std::size_t k = 0; k < w.size(); ++k) CHECK(w[k] == doctest::Approx(o[k]).epsilon(1e-10));
}

TEST_CASE("enhancement factors") {
  const Enhancement e = enhancement_factors(3.06e-3, 2.36e-3, 0.346);
  CHECK(e.alpha_max == doctest::Approx(375.26).epsilon(1e-4));
  CHECK(e.alpha == doctest::Approx(129.84).epsilon(1e-3));
  CHECK(enhancement_factors(0.01, 0.01, 1).alpha_max == doctest::Approx(100));
  CHECK(enhancement_factors(1, 1, 1).alpha == doctest::Approx(1));
  CHECK_THROWS_AS(enhancement_factors(0, 0.1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(enhancement_factors(0.1, 0.1, 1.5), std::invalid_argument);
}

TEST_CASE("final fidelity after storage and swap") {
  ProtocolConfig c;
  SUBCASE("no dephasing and perfect pairs give Phi+") {
    CHECK(predicted_final_fidelity(c, 1.0, 1e9, 123e-6) == doctest::Approx(1).epsilon(1e-9));
  }
  SUBCASE("zero storage time leaves only the initial flips") {
    CHECK(predicted_final_fidelity(c, 0.96, 0.062, 0) == doctest::Approx(0.96 * 0.96 + 0.04 * 0.04));
  }
  SUBCASE("weighted sum of flip parities") {
    const double F0 = 0.96, tau = 0.062, t = 373e-6;
    const auto w = storage_weights_oracle(c);
    double oracle = 0;
    for (std::size_t k = 0; k < w.size(); ++k)
      oracle += w[k] * even_flips(1 - F0, 1 - F0, gaussian_flip_weight(double(k) * t, tau));
    const double F = predicted_final_fidelity(c, F0, tau, t);
    CHECK(F == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(F == doctest::Approx(0.805045941598).epsilon(1e-9));
  }
  CHECK_THROWS_AS(predicted_final_fidelity(c, 1.2, 0.062, 1e-4), std::invalid_argument);
}

TEST_CASE("direct transmission rate") {
  const NodeParams node = current_node();
  LinkParams link;
  link.L = 50;
  const ProtocolConfig c = ProtocolConfig::direct_for(node, link);
  c.validate();
  // Large trial count so the relative error is well below 1%.
  const SimStats s = simulate_direct(c, 200'000, 3);
  CHECK(s.active_rate == doctest::Approx(rkr_direct(node, link)).epsilon(0.01));
  ProtocolConfig sure = c;
  sure.p_A1 = sure.p_B1 = 1;
  const SimStats t = simulate_direct(sure, 100, 3);
  CHECK(t.active_rate == doctest::Approx(1 / (c.t_attempt_loop1 + 2 * link.L / link.c_km())));
}

TEST_CASE("repeater rate falls with length") {
  const NodeParams node = current_node();
  double prev = INFINITY;
  for (double L : {10.0, 25.0, 50.0, 100.0}) {
    LinkParams link;
    link.L = L;
    const SimStats s = simulate_repeater(ProtocolConfig::repeater_for(node, link), 100'000, 5);
    CHECK(s.active_rate < prev);
    prev = s.active_rate;
  }
}
