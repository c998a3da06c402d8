#pragma once

// Birth-death chain specifications on the state space {0, ..., N} and the
// density laws beta(x), delta(x) on [0, 1] they approach as N grows.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bdmf {

/// beta(x) = sum_j g_j x^j and delta(x) = sum_j h_j x^j, padded to a common degree.
class PolynomialLaw {
 public:
  PolynomialLaw() = default;
  PolynomialLaw(std::vector<double> g, std::vector<double> h) : g_(std::move(g)), h_(std::move(h)) {
    if (g_.empty() && h_.empty()) {
      g_ = {0.0};
      h_ = {0.0};
    }
    const std::size_t len = std::max(g_.size(), h_.size());
    g_.resize(len, 0.0);
    h_.resize(len, 0.0);
    for (double v : g_)
      if (!std::isfinite(v)) throw std::invalid_argument("polynomial coefficient is not finite");
    for (double v : h_)
      if (!std::isfinite(v)) throw std::invalid_argument("polynomial coefficient is not finite");
    q_.resize(len);
    for (std::size_t j = 0; j < len; ++j) q_[j] = g_[j] - h_[j];
  }

  [[nodiscard]] const std::vector<double>& g() const { return g_; }
  [[nodiscard]] const std::vector<double>& h() const { return h_; }
  /// Net drift coefficients q_j = g_j - h_j.
  [[nodiscard]] const std::vector<double>& q() const { return q_; }
  [[nodiscard]] std::size_t degree() const { return g_.empty() ? 0 : g_.size() - 1; }

  [[nodiscard]] double beta(double x) const { return horner(g_, x); }
  [[nodiscard]] double delta(double x) const { return horner(h_, x); }

  static double horner(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

 private:
  std::vector<double> g_{0.0};
  std::vector<double> h_{0.0};
  std::vector<double> q_{0.0};
};

enum class Smoothness { C0, C1, C2 };

/// Absolute slack under which a polynomial value counts as zero (rounding in
/// coefficient expansions such as (1 - x)^2 - x).
inline constexpr double kRateSlack = 1e-12;

/// Limit rate functions on [0, 1] plus the uniformity constant L with
/// |beta(k/N) - beta_k/N| <= L/N (same for delta).
struct DensityLaw {
  std::function<double(double)> beta;
  std::function<double(double)> delta;
  double L = 0.0;
  std::optional<PolynomialLaw> poly;
  Smoothness smoothness = Smoothness::C2;

  [[nodiscard]] double drift(double x) const { return beta(x) - delta(x); }

  static DensityLaw from_polynomial(PolynomialLaw p) {
    auto shared = std::make_shared<const PolynomialLaw>(std::move(p));
    DensityLaw law;
    law.beta = [shared](double x) { return shared->beta(x); };
    law.delta = [shared](double x) { return shared->delta(x); };
    law.poly = *shared;
    law.smoothness = Smoothness::C2;
    return law;
  }
};

/// Checks nonnegativity of the law on a uniform grid of `points` samples and,
/// when a polynomial is attached, agreement of the closures with it.
inline void validate_law(const DensityLaw& law, std::size_t points = 1001) {
  if (!law.beta || !law.delta) throw std::invalid_argument("density law is missing beta or delta");
  if (!(law.L >= 0.0)) throw std::invalid_argument("uniformity constant L must be nonnegative");
  for (std::size_t i = 0; i < points; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(points - 1);
    const double b = law.beta(x);
    const double d = law.delta(x);
    if (!(b >= -kRateSlack) || !(d >= -kRateSlack)) {
      throw std::invalid_argument("density law takes a negative value at x = " + std::to_string(x));
    }
    if (law.poly) {
      if (std::abs(b - law.poly->beta(x)) > 1e-12 || std::abs(d - law.poly->delta(x)) > 1e-12) {
        throw std::invalid_argument("density law disagrees with its polynomial form");
      }
    }
  }
}

/// A finite birth-death chain with tabulated rates. Immutable once built.
class ChainSpec {
 public:
  ChainSpec(std::size_t N, std::vector<double> beta_k, std::vector<double> delta_k, DensityLaw law,
            std::string label)
      : N_(N),
        beta_(std::move(beta_k)),
        delta_(std::move(delta_k)),
        law_(std::move(law)),
        label_(std::move(label)) {
    if (N_ < 1) throw std::invalid_argument("chain size N must be at least 1");
    if (beta_.size() != N_ + 1 || delta_.size() != N_ + 1) {
      throw std::invalid_argument("rate tables must have N + 1 entries");
    }
    for (std::size_t k = 0; k <= N_; ++k) {
      if (!std::isfinite(beta_[k]) || !std::isfinite(delta_[k]) || beta_[k] < 0.0 || delta_[k] < 0.0) {
        throw std::invalid_argument("rate at k = " + std::to_string(k) + " is negative or not finite");
      }
    }
    if (delta_[0] != 0.0) throw std::invalid_argument("boundary convention violated: delta_0 != 0");
    if (beta_[N_] != 0.0) throw std::invalid_argument("boundary convention violated: beta_N != 0");
    validate_law(law_);
    alpha_.resize(N_ + 1);
    for (std::size_t k = 0; k <= N_; ++k) alpha_[k] = beta_[k] + delta_[k];
  }

  [[nodiscard]] std::size_t N() const { return N_; }
  [[nodiscard]] std::size_t states() const { return N_ + 1; }
  [[nodiscard]] const std::vector<double>& beta_k() const { return beta_; }
  [[nodiscard]] const std::vector<double>& delta_k() const { return delta_; }
  [[nodiscard]] const std::vector<double>& alpha_k() const { return alpha_; }
  [[nodiscard]] const DensityLaw& law() const { return law_; }
  [[nodiscard]] const std::string& label() const { return label_; }
  /// Set when construction had to clamp negative birth rates to zero.
  [[nodiscard]] bool clamped() const { return clamped_; }

  /// c = max_k (beta_k + delta_k) / N, the uniform scaled rate bound.
  [[nodiscard]] double rate_bound() const {
    return *std::max_element(alpha_.begin(), alpha_.end()) / static_cast<double>(N_);
  }
  [[nodiscard]] double max_alpha() const { return *std::max_element(alpha_.begin(), alpha_.end()); }

  [[nodiscard]] double grid_point(std::size_t k) const {
    return static_cast<double>(k) / static_cast<double>(N_);
  }

 private:
  friend ChainSpec make_rlad(std::size_t, double, double, double);

  std::size_t N_;
  std::vector<double> beta_;
  std::vector<double> delta_;
  std::vector<double> alpha_;
  DensityLaw law_;
  std::string label_;
  bool clamped_ = false;
};

struct DensityBoundReport {
  double max_defect = 0.0;
  bool pass = false;
};

/// max over the grid of |beta_k/N - beta(k/N)| and |delta_k/N - delta(k/N)|.
inline double density_defect(const ChainSpec& spec) {
  const double n = static_cast<double>(spec.N());
  double worst = 0.0;
  for (std::size_t k = 0; k <= spec.N(); ++k) {
    const double x = spec.grid_point(k);
    worst = std::max(worst, std::abs(spec.law().beta(x) - spec.beta_k()[k] / n));
    worst = std::max(worst, std::abs(spec.law().delta(x) - spec.delta_k()[k] / n));
  }
  return worst;
}

/// pass iff max_defect <= L_claimed / N. A defect at rounding level (relative
/// to the rate scale) counts as exact density dependence and always passes.
inline DensityBoundReport verify_density_bound(const ChainSpec& spec, double L_claimed) {
  DensityBoundReport rep;
  rep.max_defect = density_defect(spec);
  const double rounding = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, spec.rate_bound());
  rep.pass = rep.max_defect <= rounding || rep.max_defect <= L_claimed / static_cast<double>(spec.N());
  return rep;
}

/// Lumped SIS epidemic on the complete graph:
/// beta_k = beta k (N - k) / N, delta_k = gamma k.
inline ChainSpec make_sis(std::size_t N, double beta, double gamma) {
  if (N < 1) throw std::invalid_argument("SIS: N must be at least 1");
  if (!(beta >= 0.0) || !(gamma >= 0.0)) throw std::invalid_argument("SIS: rates must be nonnegative");
  const double n = static_cast<double>(N);
  std::vector<double> b(N + 1), d(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    const double kk = static_cast<double>(k);
    b[k] = beta * kk * (n - kk) / n;
    d[k] = gamma * kk;
  }
  auto law = DensityLaw::from_polynomial(PolynomialLaw({0.0, beta, -beta}, {0.0, gamma, 0.0}));
  law.L = 0.0;
  return ChainSpec(N, std::move(b), std::move(d), std::move(law), "sis");
}

/// Random link activation-deletion with global capacity k1max:
/// beta_k = alpha (N - k)(1 - k / k1max), delta_k = omega k.
/// When k1max < N the birth rates above capacity are clamped to zero, the law
/// is clamped the same way and loses its polynomial form, and clamped() is set.
inline ChainSpec make_rlad(std::size_t N, double alpha, double omega, double k1max) {
  if (N < 1) throw std::invalid_argument("RLAD: N must be at least 1");
  if (!(alpha >= 0.0) || !(omega >= 0.0)) throw std::invalid_argument("RLAD: rates must be nonnegative");
  if (!(k1max > 0.0) || !std::isfinite(k1max)) throw std::invalid_argument("RLAD: k1max must be positive");
  const double n = static_cast<double>(N);
  const double kappa = k1max / n;
  bool clamped = false;
  std::vector<double> b(N + 1), d(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    const double kk = static_cast<double>(k);
    const double raw = alpha * (n - kk) * (1.0 - kk / k1max);
    if (raw < 0.0) clamped = true;
    b[k] = std::max(0.0, raw);
    d[k] = omega * kk;
  }
  b[N] = 0.0;  // (N - N) factor; guards -0.0
  DensityLaw law;
  if (kappa >= 1.0) {
    law = DensityLaw::from_polynomial(
        PolynomialLaw({alpha, -alpha * (1.0 + 1.0 / kappa), alpha / kappa}, {0.0, omega, 0.0}));
  } else {
    law.beta = [alpha, kappa](double x) { return std::max(0.0, alpha * (1.0 - x) * (1.0 - x / kappa)); };
    law.delta = [omega](double x) { return omega * x; };
    law.smoothness = Smoothness::C0;
  }
  ChainSpec spec(N, std::move(b), std::move(d), std::move(law), "rlad");
  spec.clamped_ = clamped;
  return spec;
}

/// Exactly density dependent chain beta_k = N beta(k/N), delta_k = N delta(k/N).
inline ChainSpec make_polynomial_chain(std::size_t N, const PolynomialLaw& poly) {
  if (N < 1) throw std::invalid_argument("polynomial chain: N must be at least 1");
  const double n = static_cast<double>(N);
  if (std::abs(poly.delta(0.0)) > kRateSlack) throw std::invalid_argument("polynomial chain: delta(0) must be 0");
  if (std::abs(poly.beta(1.0)) > kRateSlack) throw std::invalid_argument("polynomial chain: beta(1) must be 0");
  std::vector<double> b(N + 1), d(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    const double x = static_cast<double>(k) / n;
    const double bx = poly.beta(x);
    const double dx = poly.delta(x);
    if (bx < -kRateSlack || dx < -kRateSlack) {
      throw std::invalid_argument("polynomial chain: negative rate at k = " + std::to_string(k));
    }
    b[k] = n * std::max(0.0, bx);
    d[k] = n * std::max(0.0, dx);
  }
  b[N] = 0.0;
  d[0] = 0.0;
  return ChainSpec(N, std::move(b), std::move(d), DensityLaw::from_polynomial(poly), "poly");
}

/// Chain with arbitrary tabulated rates approaching `law`; L is measured as
/// N * max_defect over the grid.
inline ChainSpec make_tabulated_chain(std::vector<double> beta_k, std::vector<double> delta_k,
                                      DensityLaw law, std::string label = "tabulated") {
  if (beta_k.size() < 2) throw std::invalid_argument("tabulated chain needs at least two states");
  const std::size_t N = beta_k.size() - 1;
  law.L = 0.0;
  ChainSpec probe(N, beta_k, delta_k, law, label);
  law.L = static_cast<double>(N) * density_defect(probe);
  return ChainSpec(N, std::move(beta_k), std::move(delta_k), std::move(law), std::move(label));
}

/// The all-zero chain (every state absorbing).
inline ChainSpec make_zero_chain(std::size_t N) {
  return make_polynomial_chain(N, PolynomialLaw({0.0}, {0.0}));
}

}  // namespace bdmf
