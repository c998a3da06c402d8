#pragma once

// Explicit Runge-Kutta integrators shared by the master equation, the
// mean-field flow and the truncated moment system.
//
// Dormand-Prince 5(4) with FSAL and step-size control, plus a classical
// fixed-step RK4 used for cross-checking.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdmf {

/// Raised when an integration cannot proceed: step-size underflow, step budget
/// exhausted, or a state invariant checked during stepping is violated.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OdeOptions {
  double atol = 1e-10;
  double rtol = 0.0;
  /// Upper bound on the step. Infinity means "no cap".
  double h_max = std::numeric_limits<double>::infinity();
  double h_init = 0.0;  // 0: pick automatically
  /// Relative step-size floor; below h_min_rel * max(1, |t|) the step underflows.
  double h_min_rel = 1e-14;
  std::size_t max_steps = 50'000'000;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
};

namespace detail {

inline void check_grid(std::span<const double> t_grid) {
  if (t_grid.empty()) throw std::invalid_argument("time grid is empty");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) {
      throw std::invalid_argument("time grid must be strictly increasing");
    }
  }
}

struct NoStepCheck {
  void operator()(double, std::span<const double>) const {}
};

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat (error weights)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/// Integrates y' = rhs(t, y) from t_grid[0] with y(t_grid[0]) = y0 and calls
/// observer(i, t_grid[i], y) at every grid time, including the first.
///
/// rhs has signature void(double t, std::span<const double> y, std::span<double> dy).
/// step_check(t, y) runs after each accepted step and may throw to abort.
/// Steps are truncated so that grid times are hit exactly.
template <class Rhs, class Observer, class StepCheck = detail::NoStepCheck>
OdeStats integrate_dopri5(Rhs&& rhs, std::vector<double> y, std::span<const double> t_grid,
                          const OdeOptions& opt, Observer&& observer,
                          StepCheck&& step_check = StepCheck{}) {
  using T = detail::Dopri5;
  detail::check_grid(t_grid);
  if (!(opt.atol > 0.0) && !(opt.rtol > 0.0)) {
    throw std::invalid_argument("integrator tolerance must be positive");
  }
  const std::size_t n = y.size();
  OdeStats stats;
  observer(std::size_t{0}, t_grid[0], std::span<const double>(y));
  if (t_grid.size() == 1 || n == 0) {
    for (std::size_t i = 1; i < t_grid.size(); ++i) observer(i, t_grid[i], std::span<const double>(y));
    return stats;
  }

  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n);
  auto eval = [&](double t, const std::vector<double>& in, std::vector<double>& out) {
    rhs(t, std::span<const double>(in), std::span<double>(out));
    ++stats.rhs_evals;
  };

  auto scaled_max = [&](const std::vector<double>& v, const std::vector<double>& ref) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = opt.atol + opt.rtol * std::abs(ref[i]);
      m = std::max(m, std::abs(v[i]) / sc);
    }
    return m;
  };

  double t = t_grid[0];
  eval(t, y, k1);

  double h = opt.h_init;
  if (!(h > 0.0)) {
    // Hairer-Norsett-Wanner starting step heuristic.
    const double d0 = scaled_max(y, y);
    const double d1 = scaled_max(k1, y);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min({h0, opt.h_max, t_grid.back() - t});
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h0 * k1[i];
    eval(t + h0, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) k2[i] = (k2[i] - k1[i]) / h0;
    const double d2 = scaled_max(k2, y);
    const double h1 = (std::max(d1, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                  : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
    h = std::min({100.0 * h0, h1, opt.h_max});
  }

  std::size_t next = 1;
  while (next < t_grid.size()) {
    const double target = t_grid[next];
    const double h_min = opt.h_min_rel * std::max(1.0, std::abs(t));
    if (stats.accepted + stats.rejected >= opt.max_steps) {
      throw NumericalError("integrator step budget exhausted at t = " + std::to_string(t));
    }
    h = std::min(h, opt.h_max);
    const double h_proposed = h;
    bool hits_target = false;
    if (t + h >= target || target - (t + h) < h_min) {
      h = target - t;
      hits_target = true;
    }
    if (h < h_min) {
      throw NumericalError("integrator step size underflow at t = " + std::to_string(t));
    }

    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * T::a21 * k1[i];
    eval(t + T::c2 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (T::a31 * k1[i] + T::a32 * k2[i]);
    eval(t + T::c3 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (T::a41 * k1[i] + T::a42 * k2[i] + T::a43 * k3[i]);
    eval(t + T::c4 * h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (T::a51 * k1[i] + T::a52 * k2[i] + T::a53 * k3[i] + T::a54 * k4[i]);
    eval(t + T::c5 * h, tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (T::a61 * k1[i] + T::a62 * k2[i] + T::a63 * k3[i] + T::a64 * k4[i] +
                           T::a65 * k5[i]);
    eval(t + h, tmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      y_new[i] = y[i] + h * (T::b1 * k1[i] + T::b3 * k3[i] + T::b4 * k4[i] + T::b5 * k5[i] +
                             T::b6 * k6[i]);
    eval(t + h, y_new, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] + T::e5 * k5[i] +
                            T::e6 * k6[i] + T::e7 * k7[i]);
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      err = std::max(err, std::abs(e) / sc);
    }
    if (!std::isfinite(err)) {
      throw NumericalError("non-finite state or error estimate at t = " + std::to_string(t));
    }

    if (err <= 1.0) {
      ++stats.accepted;
      t = hits_target ? target : t + h;
      y.swap(y_new);
      k1.swap(k7);
      step_check(t, std::span<const double>(y));
      while (next < t_grid.size() && t_grid[next] <= t) {
        observer(next, t_grid[next], std::span<const double>(y));
        ++next;
      }
      const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      // A step shortened to land on the grid says little about the next one.
      h = hits_target ? std::max(h * fac, h_proposed) : h * fac;
    } else {
      ++stats.rejected;
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
    }
  }
  return stats;
}

/// Classical RK4 with a constant step no larger than h_max; every grid
/// interval is split into ceil(dt / h_max) equal substeps.
template <class Rhs, class Observer, class StepCheck = detail::NoStepCheck>
OdeStats integrate_rk4_fixed(Rhs&& rhs, std::vector<double> y, std::span<const double> t_grid,
                             double h_max, Observer&& observer,
                             StepCheck&& step_check = StepCheck{}) {
  detail::check_grid(t_grid);
  if (!(h_max > 0.0)) throw std::invalid_argument("fixed step must be positive");
  const std::size_t n = y.size();
  OdeStats stats;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  auto eval = [&](double t, const std::vector<double>& in, std::vector<double>& out) {
    rhs(t, std::span<const double>(in), std::span<double>(out));
    ++stats.rhs_evals;
  };
  observer(std::size_t{0}, t_grid[0], std::span<const double>(y));
  for (std::size_t g = 1; g < t_grid.size(); ++g) {
    const double t0 = t_grid[g - 1];
    const double dt = t_grid[g] - t0;
    const auto substeps = static_cast<std::size_t>(std::ceil(dt / h_max));
    const double h = dt / static_cast<double>(substeps);
    for (std::size_t s = 0; s < substeps; ++s) {
      const double t = t0 + static_cast<double>(s) * h;
      eval(t, y, k1);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
      eval(t + 0.5 * h, tmp, k2);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
      eval(t + 0.5 * h, tmp, k3);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
      eval(t + h, tmp, k4);
      for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      ++stats.accepted;
      step_check(s + 1 == substeps ? t_grid[g] : t + h, std::span<const double>(y));
    }
    observer(g, t_grid[g], std::span<const double>(y));
  }
  return stats;
}

/// Uniform grid 0, step, 2*step, ..., t_end (t_end included even when it is
/// not a multiple of step).
inline std::vector<double> uniform_grid(double t_end, double step, double t_start = 0.0) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (t_end < t_start) throw std::invalid_argument("grid end precedes start");
  std::vector<double> grid;
  const double span = t_end - t_start;
  const auto count = static_cast<std::size_t>(std::floor(span / step + 1e-9));
  grid.reserve(count + 2);
  for (std::size_t i = 0; i <= count; ++i) grid.push_back(t_start + static_cast<double>(i) * step);
  if (t_end - grid.back() > 1e-9 * std::max(1.0, step)) grid.push_back(t_end);
  else grid.back() = t_end;
  return grid;
}

}  // namespace bdmf
