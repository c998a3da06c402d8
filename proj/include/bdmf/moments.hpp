#pragma once

// Moments y_n = sum_k (k/N)^n p_k of chain distributions, the Taylor
// remainders R_{k,n}, Q_{k,n}, the defect d_n and finite-difference checks of
// the exact moment derivative identity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bdmf/master_equation.hpp"
#include "bdmf/model.hpp"

namespace bdmf {

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double v) {
    const double s = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - s) + v : (v - s) + sum_;
    sum_ = s;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MomentVector {
  double t = 0.0;
  std::vector<double> y;  // y[n-1] = y_n, n = 1..M
  [[nodiscard]] std::size_t M() const { return y.size(); }
  [[nodiscard]] double operator[](std::size_t n) const { return y.at(n - 1); }
};

inline MomentVector moments_of(const DistributionState& dist, std::size_t M) {
  if (M < 1) throw std::invalid_argument("moment order M must be at least 1");
  if (dist.p.size() < 2) throw std::invalid_argument("distribution needs at least two states");
  const std::size_t N = dist.p.size() - 1;
  std::vector<CompensatedSum> acc(M);
  for (std::size_t k = 0; k <= N; ++k) {
    const double x = static_cast<double>(k) / static_cast<double>(N);
    double pw = 1.0;
    for (std::size_t n = 0; n < M; ++n) {
      pw *= x;
      acc[n].add(pw * dist.p[k]);
    }
  }
  MomentVector mv{dist.t, std::vector<double>(M)};
  for (std::size_t n = 0; n < M; ++n) mv.y[n] = acc[n].value();
  return mv;
}

struct RemainderTerms {
  std::size_t n = 1;
  std::size_t N = 1;
  std::vector<double> R;  // R[k] = R_{k,n}
  std::vector<double> Q;  // Q[k] = Q_{k,n}
  double c = 0.0;
};

inline constexpr std::size_t kMaxRemainderOrder = 32;

/// R_{k,n} = ((k+1)^n - k^n - n k^{n-1}) / N^{n-1},
/// Q_{k,n} = ((k-1)^n - k^n + n k^{n-1}) / N^{n-1},
/// evaluated as sum_{i=2}^{n} C(n,i) (+-1)^i (k/N)^{n-i} N^{1-i}.
/// Q_{0,n} = (-1)^n / N^{n-1} is negative for odd n; it never contributes to
/// d_n because delta_0 = 0.
inline RemainderTerms remainder_terms(std::size_t n, std::size_t N, double c = 0.0) {
  if (n < 1) throw std::invalid_argument("remainder order n must be at least 1");
  if (n > kMaxRemainderOrder) throw std::invalid_argument("remainder order n must not exceed 32");
  if (N < 1) throw std::invalid_argument("chain size N must be at least 1");
  RemainderTerms rt{n, N, std::vector<double>(N + 1, 0.0), std::vector<double>(N + 1, 0.0), c};
  if (n == 1) return rt;

  std::vector<double> binom(n + 1, 0.0);
  binom[0] = 1.0;
  for (std::size_t i = 1; i <= n; ++i) binom[i] = binom[i - 1] * static_cast<double>(n - i + 1) / static_cast<double>(i);
  const double invN = 1.0 / static_cast<double>(N);
  std::vector<double> invN_pow(n + 1, 1.0);  // N^{1-i} = invN^{i-1}
  for (std::size_t i = 1; i <= n; ++i) invN_pow[i] = i == 1 ? 1.0 : invN_pow[i - 1] * invN;

  for (std::size_t k = 0; k <= N; ++k) {
    const double x = static_cast<double>(k) * invN;
    // x^{n-i} for i = 2..n, highest power first
    std::vector<double> xp(n + 1, 1.0);
    for (std::size_t e = 1; e <= n; ++e) xp[e] = xp[e - 1] * x;
    CompensatedSum r, q;
    for (std::size_t i = 2; i <= n; ++i) {
      const double term = binom[i] * xp[n - i] * invN_pow[i];
      r.add(term);
      q.add((i % 2 == 0) ? term : -term);
    }
    rt.R[k] = r.value();
    rt.Q[k] = q.value();
  }
  return rt;
}

/// d_n = sum_k (beta_k R_{k,n} + delta_k Q_{k,n}) p_k.
inline double defect_dn(const ChainSpec& spec, const DistributionState& dist, std::size_t n) {
  if (dist.p.size() != spec.states()) throw std::invalid_argument("distribution does not match chain size");
  if (n == 1) return 0.0;
  const auto rt = remainder_terms(n, spec.N());
  CompensatedSum acc;
  for (std::size_t k = 0; k <= spec.N(); ++k) {
    acc.add((spec.beta_k()[k] * rt.R[k] + spec.delta_k()[k] * rt.Q[k]) * dist.p[k]);
  }
  return acc.value();
}

/// All defects d_1..d_M for one distribution (remainders precomputed by the caller).
inline std::vector<double> defects_of(const ChainSpec& spec, const DistributionState& dist,
                                      std::span<const RemainderTerms> remainders) {
  std::vector<double> d(remainders.size(), 0.0);
  for (std::size_t i = 0; i < remainders.size(); ++i) {
    const auto& rt = remainders[i];
    if (rt.n == 1) continue;
    CompensatedSum acc;
    for (std::size_t k = 0; k <= spec.N(); ++k) {
      acc.add((spec.beta_k()[k] * rt.R[k] + spec.delta_k()[k] * rt.Q[k]) * dist.p[k]);
    }
    d[i] = acc.value();
  }
  return d;
}

/// Right side of the exact moment identity:
/// n sum_k (beta_k - delta_k)/N (k/N)^{n-1} p_k + d_n / N.
inline double moment_derivative_rhs(const ChainSpec& spec, const DistributionState& dist, std::size_t n) {
  const double Nd = static_cast<double>(spec.N());
  CompensatedSum acc;
  for (std::size_t k = 0; k <= spec.N(); ++k) {
    const double x = spec.grid_point(k);
    acc.add((spec.beta_k()[k] - spec.delta_k()[k]) / Nd * std::pow(x, static_cast<double>(n - 1)) * dist.p[k]);
  }
  return static_cast<double>(n) * acc.value() + defect_dn(spec, dist, n) / Nd;
}

namespace detail {
inline void require_fd_trajectory(std::span<const DistributionState> traj) {
  if (traj.size() < 3) throw std::invalid_argument("derivative check needs at least three grid points");
}

template <class Observable, class Derivative>
double central_difference_residual(std::span<const DistributionState> traj, Observable&& value, Derivative&& rhs) {
  detail::require_fd_trajectory(traj);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    const double dt = traj[i + 1].t - traj[i - 1].t;
    const double fd = (value(traj[i + 1]) - value(traj[i - 1])) / dt;
    worst = std::max(worst, std::abs(fd - rhs(traj[i])));
  }
  return worst;
}
}  // namespace detail

/// Max over interior grid times of |central difference of y_n - identity rhs|.
inline double moment_derivative_residual(const ChainSpec& spec, std::span<const DistributionState> traj,
                                         std::size_t n) {
  if (n < 1) throw std::invalid_argument("moment order n must be at least 1");
  return detail::central_difference_residual(
      traj, [n](const DistributionState& d) { return moments_of(d, n).y.back(); },
      [&spec, n](const DistributionState& d) { return moment_derivative_rhs(spec, d, n); });
}

/// Finite-difference check of d/dt sum r_k p_k =
/// sum_k (beta_k (r_{k+1} - r_k) + delta_k (r_{k-1} - r_k)) p_k
/// for an arbitrary observable r (length N + 1).
inline double observable_derivative_residual(const ChainSpec& spec, std::span<const DistributionState> traj,
                                             std::span<const double> r) {
  if (r.size() != spec.states()) throw std::invalid_argument("observable does not match chain size");
  const std::size_t N = spec.N();
  auto value = [&r](const DistributionState& d) {
    CompensatedSum acc;
    for (std::size_t k = 0; k < r.size(); ++k) acc.add(r[k] * d.p[k]);
    return acc.value();
  };
  auto rhs = [&](const DistributionState& d) {
    CompensatedSum acc;
    for (std::size_t k = 0; k <= N; ++k) {
      const double up = k < N ? spec.beta_k()[k] * (r[k + 1] - r[k]) : 0.0;
      const double down = k > 0 ? spec.delta_k()[k] * (r[k - 1] - r[k]) : 0.0;
      acc.add((up + down) * d.p[k]);
    }
    return acc.value();
  };
  return detail::central_difference_residual(traj, value, rhs);
}

/// One row of the moments report: y_1..y_M and d_1..d_M at time t.
struct MomentRow {
  double t = 0.0;
  std::vector<double> y;
  std::vector<double> d;
};

inline std::vector<MomentRow> moment_table(const ChainSpec& spec, std::span<const DistributionState> traj,
                                           std::size_t M) {
  std::vector<RemainderTerms> rts;
  for (std::size_t n = 1; n <= M; ++n) rts.push_back(remainder_terms(n, spec.N(), spec.rate_bound()));
  std::vector<MomentRow> rows;
  rows.reserve(traj.size());
  for (const auto& d : traj) rows.push_back({d.t, moments_of(d, M).y, defects_of(spec, d, rts)});
  return rows;
}

/// Lemma-style bound c n (n - 1) / 2 on d_n.
inline double defect_bound(const ChainSpec& spec, std::size_t n) {
  return spec.rate_bound() * static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
}

}  // namespace bdmf
