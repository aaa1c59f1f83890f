#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace toric {

struct SeriesStats {
  double mean = 0.0;
  double mean_std = 0.0;
  double binder = 0.0;
  double binder_std = 0.0;
  double tau_int = 0.5;
};

inline constexpr std::size_t kMinBootstrapLength = 8;

// Normalized autocorrelation rho(k), k = 0..N-1, with per-lag 1/(N-k)
// normalization. Zero-padded FFT; empty result for a constant series.
std::vector<double> autocorrelation(const std::vector<double>& series);
// O(N^2) reference of the same quantity.
std::vector<double> autocorrelation_direct(const std::vector<double>& series);

// 1/2 + sum of rho(k) for k >= 1 up to (excluding) the first rho(k) <= 0.
double tau_int_from_rho(const std::vector<double>& rho);
double tau_int(const std::vector<double>& series);

// <O^4>/<O^2>^2, NaN when <O^2> vanishes.
double binder_ratio(std::span<const double> series);

// Expected block length max(1, round(8 tau_int)).
double block_length(double tau);

// Indices of one stationary-bootstrap resample of a length-n series.
void stationary_indices(std::size_t n, double block_len, std::mt19937_64& rng,
                        std::vector<std::size_t>& out);

SeriesStats stationary_bootstrap(const std::vector<double>& series, int n_resamples,
                                 std::mt19937_64& rng);

struct FunctionalStats {
  double value = 0.0;
  double std = 0.0;
};

// Bootstrap of a statistic of several paired series of equal length. The
// statistic receives the sample indices of a resample (or 0..N-1 for the
// original value). Non-finite resample values are skipped.
FunctionalStats bootstrap_functional(std::size_t n, double block_len, int n_resamples,
                                     const std::function<double(std::span<const std::size_t>)>& stat,
                                     std::mt19937_64& rng);

}  // namespace toric
