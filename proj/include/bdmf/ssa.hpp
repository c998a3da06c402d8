#pragma once

// Exact stochastic simulation of birth-death chains (Gillespie direct method)
// and Monte Carlo moment estimates. Every path draws from its own generator,
// seeded from (seed, path index), so ensembles do not depend on scheduling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "bdmf/model.hpp"

namespace bdmf {

struct SamplePath {
  std::vector<double> jump_times;  // jump_times[0] = 0 is the start
  std::vector<std::size_t> states;
  std::uint64_t seed = 0;

  /// State occupied at time t (right-continuous).
  [[nodiscard]] std::size_t state_at(double t) const {
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    return states[static_cast<std::size_t>(std::distance(jump_times.begin(), it)) - 1];
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform on (0, 1] from the top 53 bits; never returns 0.
inline double uniform_open0(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

/// Advances one jump from state k: returns the holding time (inverse transform
/// of Exp(alpha_k)) and updates k. Returns +inf and leaves k when absorbing.
inline double ssa_step(const ChainSpec& spec, std::size_t& k, std::mt19937_64& rng) {
  const double a = spec.alpha_k()[k];
  if (a <= 0.0) return std::numeric_limits<double>::infinity();
  const double wait = -std::log(uniform_open0(rng)) / a;
  const double u = uniform_open0(rng) * a;
  if (u <= spec.beta_k()[k]) ++k;
  else --k;
  return wait;
}

}  // namespace detail

/// Sub-seed for path i of an ensemble seeded with `seed`.
inline std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index) {
  return detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline SamplePath simulate_path(const ChainSpec& spec, std::size_t k0, double t_end, std::uint64_t seed) {
  if (k0 > spec.N()) throw std::invalid_argument("initial state exceeds N");
  if (!(t_end >= 0.0)) throw std::invalid_argument("end time must be nonnegative");
  SamplePath path;
  path.seed = seed;
  path.jump_times.push_back(0.0);
  path.states.push_back(k0);
  std::mt19937_64 rng(seed);
  std::size_t k = k0;
  double t = 0.0;
  for (;;) {
    std::size_t next = k;
    const double wait = detail::ssa_step(spec, next, rng);
    if (!(t + wait <= t_end)) break;
    t += wait;
    k = next;
    path.jump_times.push_back(t);
    path.states.push_back(k);
  }
  return path;
}

struct MomentEstimate {
  double t = 0.0;
  double y1 = 0.0, y1_se = 0.0;
  double y2 = 0.0, y2_se = 0.0;
};

struct EnsembleOptions {
  /// 0: use std::thread::hardware_concurrency().
  unsigned threads = 0;
  std::size_t chunk = 4096;
};

/// Sample means and standard errors of X/N and (X/N)^2 at each grid time over
/// n_runs independent paths from k0. Paths are grouped into fixed chunks whose
/// partial sums are combined in chunk order, so results are identical for any
/// thread count.
inline std::vector<MomentEstimate> ensemble_moments(const ChainSpec& spec, std::size_t k0,
                                                    std::span<const double> t_grid, std::size_t n_runs,
                                                    std::uint64_t seed, const EnsembleOptions& opt = {}) {
  if (n_runs < 2) throw std::invalid_argument("ensemble needs at least two runs");
  if (k0 > spec.N()) throw std::invalid_argument("initial state exceeds N");
  if (t_grid.empty()) throw std::invalid_argument("time grid is empty");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw std::invalid_argument("time grid must be strictly increasing");
  if (t_grid.front() < 0.0) throw std::invalid_argument("time grid must be nonnegative");

  const std::size_t G = t_grid.size();
  const std::size_t chunk = std::max<std::size_t>(1, opt.chunk);
  const std::size_t n_chunks = (n_runs + chunk - 1) / chunk;
  const double Nd = static_cast<double>(spec.N());

  // Per chunk, at each time: sums of d = x - x0, d^2, e = x^2 - x0^2, e^2.
  // Shifting by the initial value keeps the sums exact for frozen paths.
  const double x0 = static_cast<double>(k0) / Nd;
  struct Partial {
    std::vector<double> d, dd, e, ee;
  };
  std::vector<Partial> partial(n_chunks);

  auto run_chunk = [&](std::size_t c) {
    Partial p{std::vector<double>(G, 0.0), std::vector<double>(G, 0.0), std::vector<double>(G, 0.0),
              std::vector<double>(G, 0.0)};
    const std::size_t begin = c * chunk;
    const std::size_t end = std::min(n_runs, begin + chunk);
    for (std::size_t i = begin; i < end; ++i) {
      std::mt19937_64 rng(path_seed(seed, i));
      std::size_t k = k0;
      double t = 0.0;
      std::size_t g = 0;
      for (;;) {
        std::size_t next = k;
        const double wait = detail::ssa_step(spec, next, rng);
        const double t_jump = t + wait;
        while (g < G && t_grid[g] < t_jump) {
          if (k != k0) {
            const double x = static_cast<double>(k) / Nd;
            const double d = x - x0;
            const double e = x * x - x0 * x0;
            p.d[g] += d;
            p.dd[g] += d * d;
            p.e[g] += e;
            p.ee[g] += e * e;
          }
          ++g;
        }
        if (g == G) break;
        t = t_jump;
        k = next;
      }
    }
    partial[c] = std::move(p);
  };

  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_chunks));
  if (threads <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < n_chunks; c += threads) run_chunk(c);
      });
    }
  }

  const double n = static_cast<double>(n_runs);
  std::vector<MomentEstimate> out(G);
  for (std::size_t g = 0; g < G; ++g) {
    double sd = 0.0, sdd = 0.0, se = 0.0, see = 0.0;
    for (const auto& p : partial) {
      sd += p.d[g];
      sdd += p.dd[g];
      se += p.e[g];
      see += p.ee[g];
    }
    auto stderr_of = [n](double sum, double sum_sq) {
      const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
      return std::sqrt(var / n);
    };
    out[g] = {t_grid[g], x0 + sd / n, stderr_of(sd, sdd), x0 * x0 + se / n, stderr_of(se, see)};
  }
  return out;
}

/// Empirical distribution of X(t) over n_runs paths (counts per state / n_runs).
inline std::vector<double> ensemble_distribution(const ChainSpec& spec, std::size_t k0, double t, std::size_t n_runs,
                                                 std::uint64_t seed) {
  if (n_runs < 1) throw std::invalid_argument("ensemble needs at least one run");
  std::vector<double> counts(spec.states(), 0.0);
  for (std::size_t i = 0; i < n_runs; ++i) {
    std::mt19937_64 rng(path_seed(seed, i));
    std::size_t k = k0;
    double clock = 0.0;
    for (;;) {
      std::size_t next = k;
      const double wait = detail::ssa_step(spec, next, rng);
      if (!(clock + wait <= t)) break;
      clock += wait;
      k = next;
    }
    counts[k] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(n_runs);
  return counts;
}

}  // namespace bdmf
