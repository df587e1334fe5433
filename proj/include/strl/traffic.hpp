#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "strl/errors.hpp"
#include "strl/rng.hpp"

namespace strl {

// Per-second packet arrival rates driving the simulator.
struct ArrivalSeries {
  std::vector<double> rates;     // packets per second, >= 0
  std::int64_t start_time = 0;   // epoch seconds of rates[0]; 0 when synthetic

  std::size_t length() const { return rates.size(); }
  double at(std::size_t t) const { return rates[t % rates.size()]; }

  double mean() const {
    double acc = 0.0;
    for (double r : rates) acc += r;
    return acc / static_cast<double>(rates.size());
  }
};

struct AcfResult {
  std::vector<double> coefficients;  // index = lag, coefficients[0] == 1
  double ci_halfwidth = 0.0;         // 1.96 / sqrt(n)
  std::size_t n = 0;
};

// Reads a `timestamp,count` CSV into a gap-filled per-second series.
// Counts at identical timestamps accumulate; missing seconds become 0.
inline ArrivalSeries ingest_trace_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("trace is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "timestamp,count")
    throw ParseError("trace header must be 'timestamp,count', got '" + line + "'");

  std::vector<std::pair<std::int64_t, double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError("trace line " + std::to_string(line_no) + ": expected 'timestamp,count'");
    std::int64_t ts = 0;
    double count = 0.0;
    try {
      std::size_t used = 0;
      ts = std::stoll(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("trailing");
      const std::string count_str = line.substr(comma + 1);
      count = std::stod(count_str, &used);
      if (used != count_str.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError("trace line " + std::to_string(line_no) + ": non-numeric field");
    }
    if (count < 0.0)
      throw ValidationError("trace line " + std::to_string(line_no) + ": negative count");
    if (!rows.empty() && ts < rows.back().first)
      throw ValidationError("trace line " + std::to_string(line_no) + ": timestamps must be nondecreasing");
    rows.emplace_back(ts, count);
  }
  if (rows.empty()) throw ValidationError("trace contains no rows");

  const std::int64_t first = rows.front().first;
  const std::int64_t last = rows.back().first;
  ArrivalSeries series;
  series.start_time = first;
  series.rates.assign(static_cast<std::size_t>(last - first + 1), 0.0);
  for (const auto& [ts, count] : rows) series.rates[static_cast<std::size_t>(ts - first)] += count;
  return series;
}

inline ArrivalSeries ingest_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return ingest_trace_from_string(buf.str());
}

namespace detail {

// Reverse Levinson step-down: an AR(p) model is stationary iff every
// reflection coefficient has magnitude < 1.
inline bool ar_is_stationary(std::vector<double> coeffs) {
  while (!coeffs.empty()) {
    const double k = coeffs.back();
    if (!(std::abs(k) < 1.0)) return false;
    const std::size_t m = coeffs.size() - 1;
    std::vector<double> lower(m);
    const double denom = 1.0 - k * k;
    for (std::size_t i = 0; i < m; ++i)
      lower[i] = (coeffs[i] + k * coeffs[m - 1 - i]) / denom;
    coeffs = std::move(lower);
  }
  return true;
}

}  // namespace detail

// AR(p) process around base_rate with Gaussian innovations, clamped at 0.
// Deterministic for a fixed seed. A short burn-in removes the deterministic
// start-up transient.
inline ArrivalSeries synthesize_arrivals(double base_rate, const std::vector<double>& ar_coefficients,
                                         double noise_sd, std::size_t length, std::uint64_t seed) {
  if (length < 1) throw ArgumentError("synthesize_arrivals requires length >= 1");
  if (base_rate <= 0.0) throw ArgumentError("synthesize_arrivals requires base_rate > 0");
  if (noise_sd < 0.0) throw ArgumentError("synthesize_arrivals requires noise_sd >= 0");
  if (!detail::ar_is_stationary(ar_coefficients))
    throw ValidationError("AR coefficients are not stationary");

  const std::size_t p = ar_coefficients.size();
  const std::size_t burn_in = p == 0 ? 0 : std::max<std::size_t>(100, 10 * p);
  Rng rng(seed);
  // x_t - base = sum_i phi_i (x_{t-i} - base) + eps_t; history before t=0 is 0.
  std::vector<double> centered(burn_in + length, 0.0);
  for (std::size_t t = 0; t < centered.size(); ++t) {
    double v = noise_sd > 0.0 ? noise_sd * rng.next_gaussian() : 0.0;
    for (std::size_t i = 0; i < p && i < t; ++i) v += ar_coefficients[i] * centered[t - 1 - i];
    centered[t] = v;
  }
  ArrivalSeries series;
  series.rates.resize(length);
  for (std::size_t t = 0; t < length; ++t)
    series.rates[t] = std::max(0.0, base_rate + centered[burn_in + t]);
  return series;
}

// Default reproducible stand-in for a real long-memory trace: a slowly
// decaying AR(1) component plus small clamped observation noise.
inline ArrivalSeries default_synthetic_arrivals(double base_rate, std::size_t length,
                                                std::uint64_t seed, double ar_phi = 0.97,
                                                double innovation_frac = 0.03,
                                                double observation_frac = 0.01) {
  ArrivalSeries series =
      synthesize_arrivals(base_rate, {ar_phi}, innovation_frac * base_rate, length, seed);
  Rng rng(derive_seed(seed, "observation-noise"));
  const double osd = observation_frac * base_rate;
  for (auto& r : series.rates) r = std::max(0.0, r + osd * rng.next_gaussian());
  return series;
}

// Biased (divide-by-n) sample autocorrelation; guarantees |rho| <= 1 and
// rho[0] == 1. ci_halfwidth is the 95% band under the white-noise null.
inline AcfResult acf(const ArrivalSeries& series, std::size_t max_lag) {
  const std::size_t n = series.length();
  if (max_lag < 1) throw ArgumentError("acf requires max_lag >= 1");
  if (n <= max_lag)
    throw ArgumentError("acf requires series length > max_lag (" + std::to_string(n) +
                        " <= " + std::to_string(max_lag) + ")");
  double mean = 0.0;
  for (double v : series.rates) mean += v;
  mean /= static_cast<double>(n);
  double denom = 0.0;
  for (double v : series.rates) denom += (v - mean) * (v - mean);
  if (denom == 0.0) throw ValidationError("acf is undefined for a zero-variance series");

  AcfResult result;
  result.n = n;
  result.ci_halfwidth = 1.96 / std::sqrt(static_cast<double>(n));
  result.coefficients.resize(max_lag + 1);
  result.coefficients[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t t = k; t < n; ++t)
      acc += (series.rates[t] - mean) * (series.rates[t - k] - mean);
    result.coefficients[k] = acc / denom;
  }
  return result;
}

// Plot-ready rows: `lag,coefficient,ci_halfwidth`.
inline std::string acf_to_csv(const AcfResult& result) {
  std::ostringstream out;
  out << "lag,coefficient,ci_halfwidth\n";
  char buf[64];
  for (std::size_t k = 0; k < result.coefficients.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g\n", k, result.coefficients[k],
                  result.ci_halfwidth);
    out << buf;
  }
  return out.str();
}

}  // namespace strl
