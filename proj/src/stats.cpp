#include "toric/stats.hpp"

#include <fftw3.h>

#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

#include "toric/error.hpp"

namespace toric {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t padded_length(std::size_t n) {
  std::size_t m = 1;
  while (m < 2 * n) m <<= 1;
  return m;
}

std::vector<double> centered(const std::vector<double>& x, bool& constant) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  std::vector<double> c(x.size());
  constant = true;
  for (std::size_t i = 0; i < x.size(); ++i) {
    c[i] = x[i] - mean;
    if (x[i] != x[0]) constant = false;
  }
  return c;
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace

std::vector<double> autocorrelation(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 2) throw ConfigError("autocorrelation needs at least 2 samples");
  bool constant = false;
  std::vector<double> c = centered(series, constant);
  if (constant) return {};

  const std::size_t m = padded_length(n);
  const std::size_t nc = m / 2 + 1;
  double* buf = fftw_alloc_real(m);
  fftw_complex* spec = fftw_alloc_complex(nc);
  fftw_plan fwd, bwd;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(m), buf, spec, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(static_cast<int>(m), spec, buf, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < m; ++i) buf[i] = i < n ? c[i] : 0.0;
  fftw_execute(fwd);
  for (std::size_t k = 0; k < nc; ++k) {
    spec[k][0] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    spec[k][1] = 0.0;
  }
  fftw_execute(bwd);

  std::vector<double> rho(n);
  // c2r is unnormalized: divide by m
  const double c0 = buf[0] / (static_cast<double>(m) * n);
  for (std::size_t k = 0; k < n; ++k)
    rho[k] = buf[k] / (static_cast<double>(m) * (n - k)) / c0;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  fftw_free(buf);
  fftw_free(spec);
  return rho;
}

std::vector<double> autocorrelation_direct(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 2) throw ConfigError("autocorrelation needs at least 2 samples");
  bool constant = false;
  std::vector<double> c = centered(series, constant);
  if (constant) return {};
  std::vector<double> C(n);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) s += c[i] * c[i + k];
    C[k] = s / (n - k);
  }
  std::vector<double> rho(n);
  for (std::size_t k = 0; k < n; ++k) rho[k] = C[k] / C[0];
  return rho;
}

double tau_int_from_rho(const std::vector<double>& rho) {
  double tau = 0.5;
  for (std::size_t k = 1; k < rho.size() && rho[k] > 0.0; ++k) tau += rho[k];
  return tau;
}

double tau_int(const std::vector<double>& series) {
  if (series.size() < 2) return 0.5;
  return tau_int_from_rho(autocorrelation(series));
}

double binder_ratio(std::span<const double> x) {
  if (x.empty()) return kNaN;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double v2 = v * v;
    m2 += v2;
    m4 += v2 * v2;
  }
  m2 /= x.size();
  m4 /= x.size();
  if (m2 == 0.0 || m2 < 1e-12 * std::sqrt(m4)) return kNaN;
  return m4 / (m2 * m2);
}

// Four correlation lengths: with 2 tau the bootstrap error of an AR(1) mean
// comes out about 20% low.
double block_length(double tau) { return std::max(1.0, std::round(8.0 * tau)); }

void stationary_indices(std::size_t n, double block_len, std::mt19937_64& rng,
                        std::vector<std::size_t>& out) {
  out.resize(n);
  std::uniform_int_distribution<std::size_t> start(0, n - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double p_new = 1.0 / block_len;
  std::size_t pos = start(rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      if (u(rng) < p_new)
        pos = start(rng);
      else
        pos = (pos + 1) % n;
    }
    out[i] = pos;
  }
}

SeriesStats stationary_bootstrap(const std::vector<double>& series, int n_resamples,
                                 std::mt19937_64& rng) {
  const std::size_t n = series.size();
  if (n < kMinBootstrapLength)
    throw ConfigError("series of length " + std::to_string(n) +
                      " is too short for the bootstrap; increase N_samples to at least " +
                      std::to_string(kMinBootstrapLength));
  if (n_resamples < 1) throw ConfigError("N_resamples must be >= 1");

  SeriesStats st;
  st.mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
  st.binder = binder_ratio(series);
  st.tau_int = tau_int(series);
  const double len = block_length(st.tau_int);

  std::vector<double> means, binders;
  means.reserve(n_resamples);
  std::vector<std::size_t> idx;
  std::vector<double> res(n);
  for (int r = 0; r < n_resamples; ++r) {
    stationary_indices(n, len, rng, idx);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      res[i] = series[idx[i]];
      s += res[i];
    }
    means.push_back(s / n);
    double b = binder_ratio(res);
    if (std::isfinite(b)) binders.push_back(b);
  }
  st.mean_std = sample_std(means);
  st.binder_std = std::isfinite(st.binder) ? sample_std(binders) : kNaN;
  return st;
}

FunctionalStats bootstrap_functional(std::size_t n, double block_len, int n_resamples,
                                     const std::function<double(std::span<const std::size_t>)>& stat,
                                     std::mt19937_64& rng) {
  if (n < kMinBootstrapLength)
    throw ConfigError("series of length " + std::to_string(n) +
                      " is too short for the bootstrap; increase N_samples to at least " +
                      std::to_string(kMinBootstrapLength));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  FunctionalStats out;
  out.value = stat(idx);
  std::vector<double> vals;
  for (int r = 0; r < n_resamples; ++r) {
    stationary_indices(n, block_len, rng, idx);
    double v = stat(idx);
    if (std::isfinite(v)) vals.push_back(v);
  }
  out.std = std::isfinite(out.value) ? sample_std(vals) : kNaN;
  return out;
}

}  // namespace toric
