#pragma once

// Numerical versions of the semigroup comparison: grid sampling P_N, the
// generator defect (P_N A - A_N P_N) f and the semigroup defect
// (P_N T(t) - T_N(t) P_N) f, where (T(t) f)(x) = f(phi(t, x)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bdmf/master_equation.hpp"
#include "bdmf/mean_field.hpp"
#include "bdmf/model.hpp"

namespace bdmf {

struct TestFunction {
  std::function<double(double)> f;
  std::function<double(double)> f1;
  std::function<double(double)> f2;
  std::string label;

  static TestFunction identity() {
    return {[](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; }, "identity"};
  }
  static TestFunction square() {
    return {[](double x) { return x * x; }, [](double x) { return 2.0 * x; }, [](double) { return 2.0; }, "square"};
  }
  static TestFunction sine() {
    constexpr double pi = std::numbers::pi;
    return {[](double x) { return std::sin(pi * x); }, [](double x) { return pi * std::cos(pi * x); },
            [](double x) { return -pi * pi * std::sin(pi * x); }, "sin"};
  }
  static TestFunction constant(double c = 1.0) {
    return {[c](double) { return c; }, [](double) { return 0.0; }, [](double) { return 0.0; }, "constant"};
  }

  static TestFunction by_label(const std::string& label) {
    if (label == "identity") return identity();
    if (label == "square") return square();
    if (label == "sin") return sine();
    if (label == "constant") return constant();
    throw std::invalid_argument("unknown test function '" + label + "'");
  }
};

/// Central-difference check of the supplied first derivative on a sample grid
/// (h = 1e-5, tolerance 1e-4), and of f2 against f1 the same way.
inline void validate_test_function(const TestFunction& fn, std::size_t samples = 101) {
  if (!fn.f || !fn.f1 || !fn.f2) throw std::invalid_argument("test function is incomplete");
  constexpr double h = 1e-5;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(samples - 1);
    const double d1 = (fn.f(x + h) - fn.f(x - h)) / (2.0 * h);
    const double d2 = (fn.f1(x + h) - fn.f1(x - h)) / (2.0 * h);
    if (std::abs(d1 - fn.f1(x)) > 1e-4 || std::abs(d2 - fn.f2(x)) > 1e-4) {
      throw std::invalid_argument("derivatives of test function '" + fn.label + "' are inconsistent at x = " +
                                  std::to_string(x));
    }
  }
}

/// P_N f: component k is f(k/N).
inline std::vector<double> sample_grid(const TestFunction& fn, std::size_t N) {
  std::vector<double> v(N + 1);
  for (std::size_t k = 0; k <= N; ++k) v[k] = fn.f(static_cast<double>(k) / static_cast<double>(N));
  return v;
}

/// sup over [0, 1] of |g|, sampled on a fine grid.
inline double sup_norm(const std::function<double(double)>& g, std::size_t samples = 10001) {
  double m = 0.0;
  for (std::size_t i = 0; i < samples; ++i) m = std::max(m, std::abs(g(static_cast<double>(i) / static_cast<double>(samples - 1))));
  return m;
}

struct DefectReport {
  std::size_t N = 0;
  double t = 0.0;
  std::string label;
  double sup_defect = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// Pointwise (P_N A f - A_N P_N f)(k/N) for k = 0..N. The double nearest k/N
/// is off by up to half an ulp and the rates are O(N), so f is evaluated at the
/// exact grid point to first order: f(k/N) ~ f(x_k) + f'(x_k) (k/N - x_k).
inline std::vector<double> generator_defect_profile(const ChainSpec& spec, const TestFunction& fn) {
  const std::size_t N = spec.N();
  const double Nd = static_cast<double>(N);
  auto f_exact = [&](std::size_t k) {
    const double x = spec.grid_point(k);
    const double residual = std::fma(-x, Nd, static_cast<double>(k)) / Nd;
    return std::pair{fn.f(x), fn.f1(x) * residual};
  };
  std::vector<double> out(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    const double x = spec.grid_point(k);
    const auto [fx, cx] = f_exact(k);
    const double limit = spec.law().drift(x) * fn.f1(x);
    double discrete = 0.0;
    if (spec.beta_k()[k] != 0.0) {
      const auto [fu, cu] = f_exact(k + 1);
      discrete += spec.beta_k()[k] * ((fu - fx) + (cu - cx));
    }
    if (spec.delta_k()[k] != 0.0) {
      const auto [fd, cd] = f_exact(k - 1);
      discrete -= spec.delta_k()[k] * ((fx - fd) + (cx - cd));
    }
    out[k] = limit - discrete;
  }
  return out;
}

/// sup_k |(P_N A f - A_N P_N f)(k/N)| against (c ||f''|| / 2 + 2 L ||f'||) / N.
inline DefectReport generator_defect(const ChainSpec& spec, const TestFunction& fn) {
  DefectReport rep;
  rep.N = spec.N();
  rep.label = fn.label;
  for (double v : generator_defect_profile(spec, fn)) rep.sup_defect = std::max(rep.sup_defect, std::abs(v));
  const double Nd = static_cast<double>(spec.N());
  rep.bound = (spec.rate_bound() * sup_norm(fn.f2) / 2.0 + 2.0 * spec.law().L * sup_norm(fn.f1)) / Nd;
  // rounding allowance: the defect is a difference of O(c) quantities
  const double slack = 1e-12 * std::max(1.0, spec.rate_bound()) * std::max(1.0, sup_norm(fn.f1));
  rep.pass = rep.sup_defect <= rep.bound + slack;
  return rep;
}

struct SemigroupDefect {
  std::vector<double> flow_side;   // f(phi(t, k/N))
  std::vector<double> chain_side;  // (T_N(t) P_N f)_k
  double sup_defect = 0.0;

  [[nodiscard]] double at(std::size_t k) const { return std::abs(flow_side.at(k) - chain_side.at(k)); }
};

inline SemigroupDefect semigroup_defect_profile(const ChainSpec& spec, const TestFunction& fn, double t,
                                                double tol = 1e-10) {
  if (!(t >= 0.0)) throw std::invalid_argument("time must be nonnegative");
  SemigroupDefect sd;
  const auto phi = mean_field_flow_on_grid(spec.law(), spec.N(), t, tol);
  sd.flow_side.resize(phi.size());
  for (std::size_t k = 0; k < phi.size(); ++k) sd.flow_side[k] = fn.f(phi[k]);
  MasterOptions mo;
  mo.tol = tol;
  sd.chain_side = transition_action(build_generator(spec), sample_grid(fn, spec.N()), t, mo);
  for (std::size_t k = 0; k < phi.size(); ++k) sd.sup_defect = std::max(sd.sup_defect, sd.at(k));
  return sd;
}

/// sup_k |f(phi(t, k/N)) - (T_N(t) P_N f)_k|. No finite bound is claimed
/// (the constant is existential), so bound is +inf and pass records only that
/// the defect is finite.
inline DefectReport semigroup_defect(const ChainSpec& spec, const TestFunction& fn, double t, double tol = 1e-10) {
  const auto sd = semigroup_defect_profile(spec, fn, t, tol);
  DefectReport rep;
  rep.N = spec.N();
  rep.t = t;
  rep.label = fn.label;
  rep.sup_defect = sd.sup_defect;
  rep.bound = std::numeric_limits<double>::infinity();
  rep.pass = std::isfinite(sd.sup_defect);
  return rep;
}

}  // namespace bdmf
