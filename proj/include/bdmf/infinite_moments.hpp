#pragma once

// The limit moment system f_n' = n sum_j q_j f_{n+j-1} (n >= 1, f_0 = 1),
// truncated at order M with a closure rule, together with its sign-condition
// checker and the weighted l1 comparison against chain moments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdmf/master_equation.hpp"
#include "bdmf/model.hpp"
#include "bdmf/moments.hpp"
#include "bdmf/ode.hpp"

namespace bdmf {

struct SignConditionReport {
  /// individual[j] is q_j >= 0 for j != 1 and q_1 <= 0 for j == 1.
  std::vector<bool> individual;
  bool sum_ok = false;
  bool column_sums_ok = false;
  std::optional<std::size_t> first_violating_n;
  /// The closed-form condition q_0 - 2q_3 - 3q_4 - ... - (l-1)q_l <= 0 as it is
  /// usually quoted. Informational only: the column sums decide.
  bool displayed_condition_ok = false;
  bool pass = false;

  [[nodiscard]] std::vector<std::string> violations() const {
    std::vector<std::string> v;
    for (std::size_t j = 0; j < individual.size(); ++j) {
      if (!individual[j]) v.push_back("q_" + std::to_string(j) + (j == 1 ? " <= 0" : " >= 0"));
    }
    if (!sum_ok) v.emplace_back("sum q_j <= 0");
    if (!column_sums_ok) {
      v.push_back("column sums <= 0" +
                  (first_violating_n ? " (first violated at n = " + std::to_string(*first_violating_n) + ")"
                                     : std::string()));
    }
    return v;
  }
};

/// Sum of column n >= 1 of the (infinite) coefficient matrix: rows m = n + 1 - j
/// with m >= 1 contribute m q_j.
inline double moment_column_sum(std::span<const double> q, std::size_t n) {
  double s = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (j <= n) s += static_cast<double>(n + 1 - j) * q[j];
  }
  return s;
}

/// Decides exactly whether every column sum is <= 0. For n >= l - 1 the sum
/// sum_j (n + 1 - j) q_j is affine in n with slope sum_j q_j, so it suffices to
/// check the finitely many columns n < max(1, l - 1) directly, the column
/// n0 = max(1, l - 1), and the slope.
inline SignConditionReport check_sign_conditions(std::span<const double> q) {
  if (q.empty()) throw std::invalid_argument("coefficient sequence q is empty");
  SignConditionReport rep;
  const std::size_t l = q.size() - 1;
  rep.individual.resize(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) rep.individual[j] = (j == 1) ? q[j] <= 0.0 : q[j] >= 0.0;

  double total = 0.0;
  for (double v : q) total += v;
  rep.sum_ok = total <= 0.0;

  const std::size_t n0 = std::max<std::size_t>(1, l >= 1 ? l - 1 : 0);
  for (std::size_t n = 1; n <= n0; ++n) {
    if (moment_column_sum(q, n) > 0.0) {
      rep.first_violating_n = n;
      break;
    }
  }
  if (!rep.first_violating_n && total > 0.0) {
    // Affine tail with positive slope: first n > n0 where it turns positive.
    const double at_n0 = moment_column_sum(q, n0);
    const double steps = std::floor(-at_n0 / total) + 1.0;
    rep.first_violating_n = n0 + static_cast<std::size_t>(std::max(1.0, steps));
  }
  rep.column_sums_ok = !rep.first_violating_n.has_value();

  double displayed = q[0];
  for (std::size_t j = 3; j <= l; ++j) displayed -= static_cast<double>(j - 1) * q[j];
  rep.displayed_condition_ok = displayed <= 0.0;

  rep.pass = rep.sum_ok && rep.column_sums_ok &&
             std::all_of(rep.individual.begin(), rep.individual.end(), [](bool b) { return b; });
  return rep;
}

enum class Closure { PowerOfFirst, FreezeLast };

struct TruncatedMomentSystem {
  std::vector<double> q;
  std::size_t M = 10;
  Closure closure = Closure::PowerOfFirst;
  double r = 0.5;

  [[nodiscard]] std::size_t degree() const { return q.empty() ? 0 : q.size() - 1; }

  void validate() const {
    if (q.empty()) throw std::invalid_argument("truncated system needs coefficients q");
    if (M < 1) throw std::invalid_argument("truncation order M must be at least 1");
    if (M < degree()) throw std::invalid_argument("truncation order M must be at least the degree l");
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("weight r must lie in (0, 1)");
  }
};

inline constexpr double kBlowUpBound = 10.0;

/// Rows of f_1..f_M at each grid time.
struct TruncatedTrajectory {
  std::vector<double> t;
  std::vector<std::vector<double>> f;  // f[i][n-1] = f_n(t_i)
};

inline TruncatedTrajectory solve_truncated(const TruncatedMomentSystem& sys, std::span<const double> f0,
                                           std::span<const double> t_grid, double tol = 1e-10) {
  sys.validate();
  if (f0.size() != sys.M) throw std::invalid_argument("initial moments must have length M");
  const std::size_t M = sys.M;
  const std::vector<double>& q = sys.q;

  // value of f_m for 0 <= m <= M + l, with the closure beyond M
  auto component = [&sys, M](std::span<const double> f, std::size_t m) -> double {
    if (m == 0) return 1.0;
    if (m <= M) return f[m - 1];
    return sys.closure == Closure::PowerOfFirst ? std::pow(f[0], static_cast<double>(m)) : f[M - 1];
  };
  auto rhs = [&](double, std::span<const double> f, std::span<double> df) {
    for (std::size_t n = 1; n <= M; ++n) {
      double s = 0.0;
      for (std::size_t j = 0; j < q.size(); ++j) s += q[j] * component(f, n + j - 1);
      df[n - 1] = static_cast<double>(n) * s;
    }
  };
  auto guard = [](double t, std::span<const double> f) {
    for (std::size_t n = 0; n < f.size(); ++n) {
      if (!(std::abs(f[n]) <= kBlowUpBound)) {
        throw NumericalError("truncated moment system blew up at t = " + std::to_string(t) +
                             " (|f_" + std::to_string(n + 1) + "| > 10)");
      }
    }
  };
  guard(t_grid.empty() ? 0.0 : t_grid.front(), f0);

  TruncatedTrajectory out;
  out.t.assign(t_grid.begin(), t_grid.end());
  out.f.resize(t_grid.size());
  OdeOptions o;
  o.atol = tol;
  integrate_dopri5(rhs, std::vector<double>(f0.begin(), f0.end()), t_grid, o,
                   [&out](std::size_t i, double, std::span<const double> f) { out.f[i].assign(f.begin(), f.end()); },
                   guard);
  return out;
}

/// sum_{n=1}^{M} |a_n - b_n| r^n.
inline double weighted_l1_distance(std::span<const double> a, std::span<const double> b, double r) {
  if (a.size() != b.size()) throw std::invalid_argument("sequences must have equal length");
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("weight r must lie in (0, 1)");
  double s = 0.0, w = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    w *= r;
    s += std::abs(a[i] - b[i]) * w;
  }
  return s;
}

struct MomentComparison {
  double sup_distance = 0.0;
  std::vector<double> t;
  std::vector<double> distance;  // weighted distance at each grid time
  std::size_t trusted_orders = 0;
};

struct CompareOptions {
  double tol = 1e-10;
};

/// Chain moments y(t) from a point mass at round(x0 N) against the truncated
/// system started from the same moments, measured in the weighted l1 norm over
/// orders n <= M - l (orders closer to the truncation are not trusted).
inline MomentComparison compare_moment_systems(const ChainSpec& spec, const TruncatedMomentSystem& sys, double x0,
                                               std::span<const double> t_grid, const CompareOptions& opt = {}) {
  sys.validate();
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw std::invalid_argument("x0 must lie in [0, 1]");
  const std::size_t N = spec.N();
  const auto m = static_cast<std::size_t>(std::llround(x0 * static_cast<double>(N)));
  const auto gen = build_generator(spec);
  MasterOptions mo;
  mo.tol = opt.tol;
  const auto traj = integrate_kolmogorov(gen, point_mass(N, m, t_grid.front()), t_grid, mo);

  const auto y0 = moments_of(traj.front(), sys.M).y;
  const auto f = solve_truncated(sys, y0, t_grid, opt.tol);

  MomentComparison cmp;
  cmp.trusted_orders = sys.M - sys.degree();
  cmp.t.assign(t_grid.begin(), t_grid.end());
  cmp.distance.resize(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const auto y = moments_of(traj[i], sys.M).y;
    const std::span<const double> ys(y.data(), cmp.trusted_orders);
    const std::span<const double> fs(f.f[i].data(), cmp.trusted_orders);
    cmp.distance[i] = cmp.trusted_orders == 0 ? 0.0 : weighted_l1_distance(ys, fs, sys.r);
    cmp.sup_distance = std::max(cmp.sup_distance, cmp.distance[i]);
  }
  return cmp;
}

}  // namespace bdmf
