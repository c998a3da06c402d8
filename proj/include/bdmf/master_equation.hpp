#pragma once

// Kolmogorov forward equations p' = A_N p for a birth-death chain and the
// backward action g' = A_N^T g of the transition semigroup.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "bdmf/model.hpp"
#include "bdmf/ode.hpp"

namespace bdmf {

/// Tri-diagonal generator. Column k carries -alpha_k on the diagonal, beta_k
/// below it and delta_k above it, so every column sums to zero.
class GeneratorMatrix {
 public:
  explicit GeneratorMatrix(const ChainSpec& spec)
      : N_(spec.N()),
        sub_(spec.beta_k().begin(), spec.beta_k().end() - 1),
        diag_(spec.states()),
        sup_(spec.delta_k().begin() + 1, spec.delta_k().end()) {
    for (std::size_t k = 0; k <= N_; ++k) diag_[k] = -spec.alpha_k()[k];
  }

  [[nodiscard]] std::size_t N() const { return N_; }
  [[nodiscard]] std::size_t size() const { return N_ + 1; }
  /// sub()[k] = A(k+1, k) = beta_k, k = 0..N-1.
  [[nodiscard]] const std::vector<double>& sub() const { return sub_; }
  /// diag()[k] = A(k, k) = -alpha_k.
  [[nodiscard]] const std::vector<double>& diag() const { return diag_; }
  /// sup()[k] = A(k, k+1) = delta_{k+1}, k = 0..N-1.
  [[nodiscard]] const std::vector<double>& sup() const { return sup_; }

  [[nodiscard]] double operator()(std::size_t row, std::size_t col) const {
    if (row == col) return diag_[row];
    if (row == col + 1) return sub_[col];
    if (col == row + 1) return sup_[row];
    return 0.0;
  }

  /// Largest exit rate max_k alpha_k.
  [[nodiscard]] double max_rate() const {
    double m = 0.0;
    for (double d : diag_) m = std::max(m, -d);
    return m;
  }

  /// out = A p.
  void apply(std::span<const double> p, std::span<double> out) const {
    const std::size_t n = size();
    for (std::size_t k = 0; k < n; ++k) {
      double v = diag_[k] * p[k];
      if (k > 0) v += sub_[k - 1] * p[k - 1];
      if (k + 1 < n) v += sup_[k] * p[k + 1];
      out[k] = v;
    }
  }

  /// out = A^T g, i.e. out_j = beta_j (g_{j+1} - g_j) + delta_j (g_{j-1} - g_j).
  void apply_transpose(std::span<const double> g, std::span<double> out) const {
    const std::size_t n = size();
    for (std::size_t j = 0; j < n; ++j) {
      double v = diag_[j] * g[j];
      if (j + 1 < n) v += sub_[j] * g[j + 1];
      if (j > 0) v += sup_[j - 1] * g[j - 1];
      out[j] = v;
    }
  }

  /// Largest |column sum|; zero up to rounding by construction.
  [[nodiscard]] double max_column_sum() const {
    double worst = 0.0;
    const std::size_t n = size();
    for (std::size_t k = 0; k < n; ++k) {
      double s = diag_[k];
      if (k + 1 < n) s += sub_[k];
      if (k > 0) s += sup_[k - 1];
      worst = std::max(worst, std::abs(s));
    }
    return worst;
  }

 private:
  std::size_t N_;
  std::vector<double> sub_;
  std::vector<double> diag_;
  std::vector<double> sup_;
};

inline GeneratorMatrix build_generator(const ChainSpec& spec) { return GeneratorMatrix(spec); }

/// Time-stamped state distribution.
struct DistributionState {
  double t = 0.0;
  std::vector<double> p;
};

inline constexpr double kMassTolerance = 1e-10;
inline constexpr double kPositivityTolerance = 1e-12;

inline DistributionState point_mass(std::size_t N, std::size_t m, double t = 0.0) {
  if (m > N) throw std::invalid_argument("point mass index exceeds N");
  DistributionState d{t, std::vector<double>(N + 1, 0.0)};
  d.p[m] = 1.0;
  return d;
}

/// Throws NumericalError if p is not a probability vector within the mass
/// and positivity tolerances.
inline void check_distribution(double t, std::span<const double> p) {
  double sum = 0.0, comp = 0.0, lo = std::numeric_limits<double>::infinity();
  for (double v : p) {
    // Neumaier summation
    const double s = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - s) + v : (v - s) + sum;
    sum = s;
    lo = std::min(lo, v);
  }
  sum += comp;
  if (!(std::abs(sum - 1.0) <= kMassTolerance) || !(lo >= -kPositivityTolerance)) {
    std::ostringstream os;
    os.precision(17);
    os << "distribution invariant violated at t = " << t << ": mass " << sum << ", min " << lo;
    throw NumericalError(os.str());
  }
}

enum class MasterMethod { Adaptive, FixedRk4 };

struct MasterOptions {
  double tol = 1e-10;
  MasterMethod method = MasterMethod::Adaptive;
  /// Step cap as a multiple of 1 / max_k alpha_k. At 0.8 the Dormand-Prince
  /// update is a nonnegative combination of powers of the uniformized matrix
  /// I + A / max_alpha, so it maps probability vectors to nonnegative vectors.
  double step_cap = 0.8;
  /// Fixed RK4 step as a multiple of 1 / max_k alpha_k.
  double fixed_step = 0.5;
};

namespace detail {
inline double rate_step(const GeneratorMatrix& gen, double factor) {
  const double a = gen.max_rate();
  return a > 0.0 ? factor / a : std::numeric_limits<double>::infinity();
}
}  // namespace detail

/// Solves p' = A_N p and returns p at every grid time. Mass and positivity are
/// checked after every accepted step (never repaired).
inline std::vector<DistributionState> integrate_kolmogorov(const GeneratorMatrix& gen,
                                                           const DistributionState& p0,
                                                           std::span<const double> t_grid,
                                                           const MasterOptions& opt = {}) {
  if (p0.p.size() != gen.size()) throw std::invalid_argument("initial distribution has the wrong length");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (t_grid.empty() || t_grid.front() != p0.t) {
    throw std::invalid_argument("time grid must start at the initial distribution's time");
  }
  check_distribution(p0.t, p0.p);

  std::vector<DistributionState> out(t_grid.size());
  auto rhs = [&gen](double, std::span<const double> p, std::span<double> dp) { gen.apply(p, dp); };
  auto observe = [&out](std::size_t i, double t, std::span<const double> p) {
    out[i].t = t;
    out[i].p.assign(p.begin(), p.end());
  };
  auto step_check = [](double t, std::span<const double> p) { check_distribution(t, p); };

  if (opt.method == MasterMethod::Adaptive) {
    OdeOptions o;
    o.atol = opt.tol;
    o.h_max = detail::rate_step(gen, opt.step_cap);
    integrate_dopri5(rhs, p0.p, t_grid, o, observe, step_check);
  } else {
    const double h = std::min(detail::rate_step(gen, opt.fixed_step), t_grid.back() - t_grid.front() + 1.0);
    integrate_rk4_fixed(rhs, p0.p, t_grid, h, observe, step_check);
  }
  return out;
}

/// e^{A_N^T t} f computed by integrating g' = A_N^T g from g(0) = f.
/// Component j is E[f(X(t)) | X(0) = j].
inline std::vector<double> transition_action(const GeneratorMatrix& gen, std::span<const double> f,
                                             double t, const MasterOptions& opt = {}) {
  if (f.size() != gen.size()) throw std::invalid_argument("observable has the wrong length");
  if (!(t >= 0.0)) throw std::invalid_argument("transition time must be nonnegative");
  std::vector<double> g(f.begin(), f.end());
  if (t == 0.0) return g;
  auto rhs = [&gen](double, std::span<const double> v, std::span<double> dv) { gen.apply_transpose(v, dv); };
  auto observe = [&g](std::size_t i, double, std::span<const double> v) {
    if (i == 1) g.assign(v.begin(), v.end());
  };
  const double grid[2] = {0.0, t};
  if (opt.method == MasterMethod::Adaptive) {
    OdeOptions o;
    o.atol = opt.tol;
    o.h_max = detail::rate_step(gen, opt.step_cap);
    integrate_dopri5(rhs, std::move(g), grid, o, observe);
  } else {
    integrate_rk4_fixed(rhs, std::move(g), grid, std::min(detail::rate_step(gen, opt.fixed_step), t), observe);
  }
  return g;
}

/// Transition action at several times at once; result[i] = e^{A_N^T t_grid[i]} f.
inline std::vector<std::vector<double>> transition_action_series(const GeneratorMatrix& gen,
                                                                 std::span<const double> f,
                                                                 std::span<const double> t_grid,
                                                                 const MasterOptions& opt = {}) {
  if (f.size() != gen.size()) throw std::invalid_argument("observable has the wrong length");
  if (t_grid.empty() || t_grid.front() != 0.0) throw std::invalid_argument("time grid must start at 0");
  std::vector<std::vector<double>> out(t_grid.size());
  auto rhs = [&gen](double, std::span<const double> v, std::span<double> dv) { gen.apply_transpose(v, dv); };
  auto observe = [&out](std::size_t i, double, std::span<const double> v) { out[i].assign(v.begin(), v.end()); };
  OdeOptions o;
  o.atol = opt.tol;
  o.h_max = detail::rate_step(gen, opt.step_cap);
  integrate_dopri5(rhs, std::vector<double>(f.begin(), f.end()), t_grid, o, observe);
  return out;
}

}  // namespace bdmf
