#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "bdmf/master_equation.hpp"
#include "bdmf/model.hpp"

using namespace bdmf;

namespace {

ChainSpec two_state() { return make_polynomial_chain(1, PolynomialLaw({1.0, -1.0}, {0.0, 1.0})); }

double mass(const std::vector<double>& p) {
  double s = 0.0;
  for (double v : p) s += v;
  return s;
}

std::vector<double> random_distribution(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n);
  for (double& v : p) v = u(rng);
  const double s = mass(p);
  for (double& v : p) v /= s;
  return p;
}

}  // namespace

TEST(Generator, SisSmallMatrix) {
  const auto A = build_generator(make_sis(2, 1.0, 1.0));
  const double want[3][3] = {{0, 1, 0}, {0, -1.5, 2}, {0, 0.5, -2}};
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(A(r, c), want[r][c]) << r << "," << c;
  EXPECT_EQ(A.max_column_sum(), 0.0);
}

TEST(Generator, ZeroChainIsZeroMatrix) {
  const auto A = build_generator(make_zero_chain(4));
  for (std::size_t r = 0; r <= 4; ++r)
    for (std::size_t c = 0; c <= 4; ++c) EXPECT_EQ(A(r, c), 0.0);
}

TEST(Generator, ConservativeUpToLargeN) {
  for (std::size_t N : {10u, 1000u, 10000u}) {
    for (const auto& spec : {make_sis(N, 2.0, 1.0), make_rlad(N, 1.0, 1.0, static_cast<double>(N)),
                             make_rlad(N, 3.0, 0.5, 0.5 * static_cast<double>(N))}) {
      const auto A = build_generator(spec);
      EXPECT_LE(A.max_column_sum(), 1e-12 * std::max(1.0, A.max_rate()));
      for (std::size_t k = 0; k + 1 <= N; ++k) {
        EXPECT_GE(A.sub()[k], 0.0);
        EXPECT_GE(A.sup()[k], 0.0);
      }
      for (double d : A.diag()) EXPECT_LE(d, 0.0);
    }
  }
}

TEST(Generator, TransposeMatchesDenseProduct) {
  const auto A = build_generator(make_rlad(6, 1.0, 2.0, 6.0));
  std::vector<double> g{0.3, -1.0, 2.0, 0.5, 0.0, 4.0, -2.5}, out(7);
  A.apply_transpose(g, out);
  for (std::size_t j = 0; j < 7; ++j) {
    double want = 0.0;
    for (std::size_t i = 0; i < 7; ++i) want += A(i, j) * g[i];
    EXPECT_NEAR(out[j], want, 1e-14);
  }
  A.apply(g, out);
  for (std::size_t i = 0; i < 7; ++i) {
    double want = 0.0;
    for (std::size_t j = 0; j < 7; ++j) want += A(i, j) * g[j];
    EXPECT_NEAR(out[i], want, 1e-14);
  }
}

TEST(Kolmogorov, ZeroGeneratorKeepsDistribution) {
  const auto A = build_generator(make_zero_chain(3));
  DistributionState p0{0.0, {0.1, 0.2, 0.3, 0.4}};
  const auto out = integrate_kolmogorov(A, p0, uniform_grid(2.0, 0.5));
  for (const auto& d : out) EXPECT_EQ(d.p, p0.p);
}

TEST(Kolmogorov, TwoStateClosedForm) {
  const auto grid = uniform_grid(3.0, 0.1);
  for (auto method : {MasterMethod::Adaptive, MasterMethod::FixedRk4}) {
    MasterOptions o;
    o.method = method;
    // the fixed step defaults to h = 1 / (2 max alpha), accurate to a few 1e-6 here
    const double tol = method == MasterMethod::Adaptive ? 1e-9 : 5e-6;
    const auto out = integrate_kolmogorov(build_generator(two_state()), point_mass(1, 0), grid, o);
    for (const auto& d : out) EXPECT_NEAR(d.p[0], 0.5 + 0.5 * std::exp(-2.0 * d.t), tol);
  }
  const auto at1 = integrate_kolmogorov(build_generator(two_state()), point_mass(1, 0), std::vector<double>{0.0, 1.0});
  EXPECT_NEAR(at1[1].p[0], 0.56767, 1e-5);
}

TEST(Kolmogorov, TwoStateApproachesEquilibrium) {
  const std::vector<double> b{3.0, 0.0}, d{0.0, 1.0};
  DensityLaw law;
  law.beta = [](double x) { return 3.0 * (1.0 - x); };
  law.delta = [](double x) { return x; };
  const auto spec = make_tabulated_chain(b, d, law);
  const auto out = integrate_kolmogorov(build_generator(spec), point_mass(1, 0), std::vector<double>{0.0, 20.0});
  EXPECT_NEAR(out[1].p[0], 0.25, 1e-10);  // (delta_1, beta_0) / (beta_0 + delta_1)
  EXPECT_NEAR(out[1].p[1], 0.75, 1e-10);
}

TEST(Kolmogorov, ConservationAndPositivity) {
  for (const auto& spec : {make_sis(50, 2.0, 1.0), make_rlad(50, 1.0, 1.0, 50.0), make_sis(400, 5.0, 0.5)}) {
    const auto out = integrate_kolmogorov(build_generator(spec), point_mass(spec.N(), spec.N() / 5), uniform_grid(3.0, 0.05));
    for (const auto& d : out) {
      EXPECT_NEAR(mass(d.p), 1.0, 1e-10);
      EXPECT_GE(*std::min_element(d.p.begin(), d.p.end()), -1e-12);
    }
  }
}

TEST(Kolmogorov, AdaptiveAgreesWithFixedStep) {
  const auto spec = make_rlad(30, 1.0, 1.0, 30.0);
  const auto grid = uniform_grid(2.0, 0.5);
  MasterOptions rk4;
  rk4.method = MasterMethod::FixedRk4;
  rk4.fixed_step = 0.1;
  const auto a = integrate_kolmogorov(build_generator(spec), point_mass(30, 6), grid);
  const auto b = integrate_kolmogorov(build_generator(spec), point_mass(30, 6), grid, rk4);
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t k = 0; k <= 30; ++k) EXPECT_NEAR(a[i].p[k], b[i].p[k], 1e-8);
}

TEST(Kolmogorov, RejectsInvalidInitialState) {
  const auto A = build_generator(make_sis(2, 1.0, 1.0));
  const std::vector<double> grid{0.0, 1.0};
  EXPECT_THROW(integrate_kolmogorov(A, DistributionState{0.0, {0.5, 0.5, 0.5}}, grid), NumericalError);
  EXPECT_THROW(integrate_kolmogorov(A, DistributionState{0.0, {1.1, -0.1, 0.0}}, grid), NumericalError);
  EXPECT_THROW(integrate_kolmogorov(A, DistributionState{0.0, {1.0, 0.0}}, grid), std::invalid_argument);
  EXPECT_THROW(integrate_kolmogorov(A, point_mass(2, 0, 0.5), grid), std::invalid_argument);
  MasterOptions bad;
  bad.tol = 0.0;
  EXPECT_THROW(integrate_kolmogorov(A, point_mass(2, 0), grid, bad), std::invalid_argument);
}

TEST(TransitionAction, IdentityAtZeroAndConstantsFixed) {
  const auto A = build_generator(make_sis(20, 2.0, 1.0));
  std::vector<double> f(21);
  for (std::size_t k = 0; k <= 20; ++k) f[k] = std::sin(static_cast<double>(k));
  EXPECT_EQ(transition_action(A, f, 0.0), f);
  const std::vector<double> ones(21, 1.0);
  for (double t : {0.5, 1.0, 4.0})
    for (double v : transition_action(A, ones, t)) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(TransitionAction, TwoStateClosedForm) {
  const auto g = transition_action(build_generator(two_state()), std::vector<double>{0.0, 1.0}, 1.0);
  EXPECT_NEAR(g[0], 0.5 - 0.5 * std::exp(-2.0), 1e-10);
  EXPECT_NEAR(g[0], 0.43233, 1e-5);
  EXPECT_NEAR(g[1], 0.5 + 0.5 * std::exp(-2.0), 1e-10);
}

TEST(TransitionAction, DualityWithForwardEquation) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (const auto& spec : {make_sis(15, 2.0, 1.0), make_rlad(12, 1.0, 1.5, 12.0), make_sis(40, 4.0, 1.0)}) {
    const auto A = build_generator(spec);
    for (int trial = 0; trial < 3; ++trial) {
      DistributionState p0{0.0, random_distribution(spec.states(), rng)};
      std::vector<double> f(spec.states());
      for (double& v : f) v = normal(rng);
      for (double t : {0.1, 1.0}) {
        const auto pt = integrate_kolmogorov(A, p0, std::vector<double>{0.0, t}).back().p;
        const auto g = transition_action(A, f, t);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) {
          lhs += pt[k] * f[k];
          rhs += p0.p[k] * g[k];
        }
        EXPECT_NEAR(lhs, rhs, 1e-8);
      }
    }
  }
}

TEST(TransitionAction, SeriesMatchesSingleCalls) {
  const auto A = build_generator(make_rlad(10, 1.0, 1.0, 10.0));
  std::vector<double> f(11);
  for (std::size_t k = 0; k <= 10; ++k) f[k] = static_cast<double>(k * k);
  const std::vector<double> grid{0.0, 0.3, 1.0};
  const auto series = transition_action_series(A, f, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto single = transition_action(A, f, grid[i]);
    for (std::size_t k = 0; k <= 10; ++k) EXPECT_NEAR(series[i][k], single[k], 1e-9);
  }
}
