#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "bdmf/model.hpp"

using namespace bdmf;

namespace {

void expect_rates(const std::vector<double>& got, const std::vector<double>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t k = 0; k < want.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-15) << "k = " << k;
}

void expect_chain_invariants(const ChainSpec& s) {
  EXPECT_EQ(s.delta_k().front(), 0.0);
  EXPECT_EQ(s.beta_k().back(), 0.0);
  for (std::size_t k = 0; k <= s.N(); ++k) {
    EXPECT_EQ(s.alpha_k()[k], s.beta_k()[k] + s.delta_k()[k]);
    EXPECT_GE(s.beta_k()[k], 0.0);
    EXPECT_GE(s.delta_k()[k], 0.0);
  }
}

}  // namespace

TEST(PolynomialLaw, DerivedCoefficientsAndPadding) {
  const PolynomialLaw p({1.0, 2.0}, {0.5, 0.0, 3.0});
  EXPECT_EQ(p.degree(), 2u);
  ASSERT_EQ(p.g().size(), 3u);
  EXPECT_EQ(p.g()[2], 0.0);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(p.q()[j], p.g()[j] - p.h()[j]);
  EXPECT_DOUBLE_EQ(p.beta(0.5), 2.0);
  EXPECT_DOUBLE_EQ(p.delta(0.5), 0.5 + 0.75);
}

TEST(MakeSis, SmallChainRates) {
  const auto s = make_sis(2, 1.0, 1.0);
  expect_rates(s.beta_k(), {0.0, 0.5, 0.0});
  expect_rates(s.delta_k(), {0.0, 1.0, 2.0});
  expect_rates(s.alpha_k(), {0.0, 1.5, 2.0});
  expect_chain_invariants(s);
}

TEST(MakeSis, ZeroRates) {
  const auto s = make_sis(10, 0.0, 0.0);
  for (std::size_t k = 0; k <= 10; ++k) EXPECT_EQ(s.alpha_k()[k], 0.0);
}

TEST(MakeSis, ExactlyDensityDependent) {
  const auto s = make_sis(100, 2.0, 1.0);
  EXPECT_LE(density_defect(s), 1e-15);
  EXPECT_EQ(s.law().L, 0.0);
  ASSERT_TRUE(s.law().poly.has_value());
  EXPECT_EQ(s.law().poly->q(), (std::vector<double>{0.0, 1.0, -2.0}));
  EXPECT_DOUBLE_EQ(s.rate_bound(), *std::max_element(s.alpha_k().begin(), s.alpha_k().end()) / 100.0);
}

TEST(MakeSis, RejectsBadInput) {
  EXPECT_THROW(make_sis(0, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(make_sis(5, -1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(make_sis(5, 1.0, -1.0), std::invalid_argument);
}

TEST(MakeRlad, SmallChainRates) {
  const auto s = make_rlad(3, 1.0, 1.0, 3.0);
  expect_rates(s.beta_k(), {3.0, 4.0 / 3.0, 1.0 / 3.0, 0.0});
  expect_rates(s.delta_k(), {0.0, 1.0, 2.0, 3.0});
  expect_chain_invariants(s);
  EXPECT_FALSE(s.clamped());
}

TEST(MakeRlad, PureDeathWhenAlphaZero) {
  const auto s = make_rlad(5, 0.0, 1.0, 5.0);
  for (double b : s.beta_k()) EXPECT_EQ(b, 0.0);
}

TEST(MakeRlad, DriftCoefficients) {
  const auto s = make_rlad(100, 1.0, 1.0, 100.0);
  ASSERT_TRUE(s.law().poly.has_value());
  const auto& q = s.law().poly->q();
  ASSERT_EQ(q.size(), 3u);
  EXPECT_DOUBLE_EQ(q[0], 1.0);
  EXPECT_DOUBLE_EQ(q[1], -3.0);
  EXPECT_DOUBLE_EQ(q[2], 1.0);
}

TEST(MakeRlad, SmallCapacityIsClampedAndFlagged) {
  const auto s = make_rlad(10, 1.0, 1.0, 4.0);
  EXPECT_TRUE(s.clamped());
  for (std::size_t k = 5; k <= 10; ++k) EXPECT_EQ(s.beta_k()[k], 0.0);
  EXPECT_GT(s.beta_k()[3], 0.0);
  expect_chain_invariants(s);
  EXPECT_THROW(make_rlad(10, 1.0, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(make_rlad(10, 1.0, 1.0, -2.0), std::invalid_argument);
}

TEST(MakePolynomialChain, MatchesSis) {
  const auto p = make_polynomial_chain(4, PolynomialLaw({0.0, 1.0, -1.0}, {0.0, 1.0, 0.0}));
  const auto s = make_sis(4, 1.0, 1.0);
  expect_rates(p.beta_k(), s.beta_k());
  expect_rates(p.delta_k(), s.delta_k());
}

TEST(MakePolynomialChain, ZeroChainAndBoundaryViolation) {
  const auto z = make_polynomial_chain(2, PolynomialLaw({0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}));
  for (double a : z.alpha_k()) EXPECT_EQ(a, 0.0);
  EXPECT_THROW(make_polynomial_chain(3, PolynomialLaw({1.0}, {0.0})), std::invalid_argument);
  EXPECT_THROW(make_polynomial_chain(3, PolynomialLaw({0.0, 1.0, -1.0}, {1.0})), std::invalid_argument);
  // negative birth rate inside the grid
  EXPECT_THROW(make_polynomial_chain(4, PolynomialLaw({0.0, -1.0, 1.0}, {0.0})), std::invalid_argument);
}

TEST(VerifyDensityBound, Examples) {
  EXPECT_TRUE(verify_density_bound(make_sis(50, 2.0, 1.0), 0.0).pass);
  EXPECT_LE(verify_density_bound(make_sis(50, 2.0, 1.0), 0.0).max_defect, 1e-15);
  EXPECT_TRUE(verify_density_bound(make_rlad(50, 1.0, 1.0, 50.0), 0.0).pass);
  EXPECT_TRUE(verify_density_bound(make_zero_chain(7), -1.0).pass);
}

TEST(VerifyDensityBound, PerturbedRatesNeedMatchingConstant) {
  const std::size_t N = 20;
  std::vector<double> b(N + 1), d(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    b[k] = static_cast<double>(k * (N - k)) / N + (k < N ? 0.3 : 0.0);
    d[k] = static_cast<double>(k);
  }
  const auto s = make_tabulated_chain(b, d, DensityLaw::from_polynomial(PolynomialLaw({0.0, 1.0, -1.0}, {0.0, 1.0})));
  const auto rep = verify_density_bound(s, 0.0);
  EXPECT_NEAR(rep.max_defect, 0.3 / N, 1e-15);
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(verify_density_bound(s, -1.0).pass);
  EXPECT_TRUE(verify_density_bound(s, 0.3 + 1e-12).pass);
  EXPECT_NEAR(s.law().L, 0.3, 1e-12);
}

TEST(ChainSpec, ValidatesInvariants) {
  const auto law = DensityLaw::from_polynomial(PolynomialLaw({0.0}, {0.0}));
  EXPECT_THROW(ChainSpec(2, {0, 1, 0}, {1, 0, 0}, law, "x"), std::invalid_argument);  // delta_0 != 0
  EXPECT_THROW(ChainSpec(2, {0, 1, 1}, {0, 0, 0}, law, "x"), std::invalid_argument);  // beta_N != 0
  EXPECT_THROW(ChainSpec(2, {0, -1, 0}, {0, 0, 0}, law, "x"), std::invalid_argument);
  EXPECT_THROW(ChainSpec(2, {0, NAN, 0}, {0, 0, 0}, law, "x"), std::invalid_argument);
  EXPECT_THROW(ChainSpec(2, {0, 0}, {0, 0, 0}, law, "x"), std::invalid_argument);
}

TEST(DensityLaw, RejectsNegativeOrInconsistentLaw) {
  DensityLaw bad;
  bad.beta = [](double x) { return x - 0.5; };
  bad.delta = [](double) { return 0.0; };
  EXPECT_THROW(validate_law(bad), std::invalid_argument);
  auto mismatch = DensityLaw::from_polynomial(PolynomialLaw({0.0, 1.0}, {0.0}));
  mismatch.beta = [](double x) { return 2.0 * x; };
  EXPECT_THROW(validate_law(mismatch), std::invalid_argument);
}

TEST(BuiltIns, InvariantsAcrossSizes) {
  for (std::size_t N : {1u, 2u, 7u, 50u, 333u}) {
    expect_chain_invariants(make_sis(N, 2.0, 1.0));
    expect_chain_invariants(make_rlad(N, 1.0, 1.0, static_cast<double>(N)));
    EXPECT_LE(density_defect(make_rlad(N, 1.0, 1.0, static_cast<double>(N))), 1e-13);
  }
}
