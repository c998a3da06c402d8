#pragma once

// The mean-field ODE x' = beta(x) - delta(x) and its flow phi(t, x0).

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "bdmf/model.hpp"
#include "bdmf/ode.hpp"

namespace bdmf {

inline double mf_rhs(const DensityLaw& law, double x) { return law.beta(x) - law.delta(x); }

struct MeanFieldTrajectory {
  std::vector<double> t;
  std::vector<double> x;
  double x0 = 0.0;
};

inline MeanFieldTrajectory solve_mean_field(const DensityLaw& law, double x0, std::span<const double> t_grid,
                                            double tol = 1e-10) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  MeanFieldTrajectory traj;
  traj.x0 = x0;
  traj.t.assign(t_grid.begin(), t_grid.end());
  traj.x.resize(t_grid.size());
  OdeOptions o;
  o.atol = tol;
  integrate_dopri5([&law](double, std::span<const double> y, std::span<double> dy) { dy[0] = mf_rhs(law, y[0]); },
                   std::vector<double>{x0}, t_grid, o,
                   [&traj](std::size_t i, double, std::span<const double> y) { traj.x[i] = y[0]; });
  return traj;
}

/// phi(t, x0_i) for a batch of initial values at every grid time:
/// result[i][j] = phi(t_grid[i], x0[j]). The components are uncoupled; they
/// share one step sequence, controlled by the worst component.
inline std::vector<std::vector<double>> mean_field_flow(const DensityLaw& law, std::span<const double> x0,
                                                        std::span<const double> t_grid, double tol = 1e-10) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  std::vector<std::vector<double>> out(t_grid.size());
  OdeOptions o;
  o.atol = tol;
  integrate_dopri5(
      [&law](double, std::span<const double> y, std::span<double> dy) {
        for (std::size_t j = 0; j < y.size(); ++j) dy[j] = mf_rhs(law, y[j]);
      },
      std::vector<double>(x0.begin(), x0.end()), t_grid, o,
      [&out](std::size_t i, double, std::span<const double> y) { out[i].assign(y.begin(), y.end()); });
  return out;
}

/// phi(t, k/N) for k = 0..N at a single time t >= 0.
inline std::vector<double> mean_field_flow_on_grid(const DensityLaw& law, std::size_t N, double t, double tol = 1e-10) {
  if (!(t >= 0.0)) throw std::invalid_argument("flow time must be nonnegative");
  std::vector<double> x0(N + 1);
  for (std::size_t k = 0; k <= N; ++k) x0[k] = static_cast<double>(k) / static_cast<double>(N);
  if (t == 0.0) return x0;
  const double grid[2] = {0.0, t};
  return mean_field_flow(law, x0, grid, tol).back();
}

}  // namespace bdmf
