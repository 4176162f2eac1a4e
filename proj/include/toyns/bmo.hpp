#pragma once

// Periodic BMO^{-1} proxy: the potential F_ij = d_i Lap^{-1} u_j, so that
// div F = u, and the mean oscillation of F sampled over random balls.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "toyns/fft.hpp"
#include "toyns/quadrature.hpp"

namespace toyns {

struct BallOscillation {
  Ball ball;
  double mean_oscillation = 0.0;  // (1/|B|) int_B |F - [F]_B|
};

struct BmoProxy {
  TensorField potential;
  double seminorm = 0.0;
  double divergence_error = 0.0;  // max |div F - u| / max |u|
  std::vector<BallOscillation> samples;
};

inline constexpr double kBmoDivergenceTolerance = 1e-10;

namespace detail {

/// Spectral derivative symbols along each axis, zero at the Nyquist index.
inline std::array<std::vector<double>, 3> derivative_symbols(const Grid3& g) {
  std::array<std::vector<double>, 3> k;
  for (int a = 0; a < 3; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    const int n = g.n[sa];
    k[sa].resize(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) {
      const int m = Fft3::wavenumber(c, n);
      k[sa][static_cast<std::size_t>(c)] =
          (n % 2 == 0 && c == n / 2) ? 0.0 : 2.0 * std::numbers::pi * m / g.period(a);
    }
  }
  return k;
}

}  // namespace detail

/// Mean oscillation of the tensor F over the ball (Frobenius norm).
inline double mean_oscillation(const TensorField& F, const Ball& b) {
  const BallNodes bn = ball_nodes(F.grid, b);
  const std::size_t m = bn.nodes.size();
  std::array<double, 9> mean{};
  std::vector<double> vals(m);
  for (std::size_t c = 0; c < 9; ++c) {
    for (std::size_t q = 0; q < m; ++q) vals[q] = F.comp[c][bn.nodes[q]];
    mean[c] = pairwise_sum(vals) / static_cast<double>(m);
  }
  for (std::size_t q = 0; q < m; ++q) {
    double s = 0.0;
    for (std::size_t c = 0; c < 9; ++c) {
      const double d = F.comp[c][bn.nodes[q]] - mean[c];
      s += d * d;
    }
    vals[q] = std::sqrt(s);
  }
  return pairwise_sum(vals) / static_cast<double>(m);
}

/// Spectral potential with the zero mode removed; rejects fields with a mean
/// or with content the Nyquist-free symbols cannot represent.
inline BmoProxy bmo_proxy(const VelocityField& u, int ball_samples, std::uint64_t seed) {
  const Grid3& g = u.grid;
  if (!g.periodic()) throw InvalidArgument("BMO^-1 proxy requires a periodic grid");
  if (ball_samples < 0) throw InvalidArgument("ball sample count must be non-negative");
  require_finite(u, "bmo_proxy");
  const double umax = max_magnitude(u);
  for (std::size_t c = 0; c < 3; ++c) {
    const double mean = deterministic_sum(u.comp[c]) / static_cast<double>(g.size());
    if (std::abs(mean) > 1e-12 * std::max(umax, 1e-300) && umax > 0.0)
      throw InvalidArgument("BMO⁻¹ proxy requires mean-zero field");
  }

  const auto k = detail::derivative_symbols(g);
  BmoProxy out;
  out.potential = TensorField(g, u.time);
  Fft3 fft(g.n), work(g.n);
  const double inv_n = 1.0 / static_cast<double>(g.size());
  VelocityField div(g, u.time);
  for (std::size_t j = 0; j < 3; ++j) {
    auto s = fft.data();
    for (std::size_t p = 0; p < g.size(); ++p) s[p] = {u.comp[j][p], 0.0};
    fft.forward();
    for (std::size_t i = 0; i < 3; ++i) {
      auto w = work.data();
      for (std::size_t p = 0; p < g.size(); ++p) {
        const auto c = g.coords(p);
        const double k0 = k[0][static_cast<std::size_t>(c[0])], k1 = k[1][static_cast<std::size_t>(c[1])],
                     k2 = k[2][static_cast<std::size_t>(c[2])];
        const double kk = k0 * k0 + k1 * k1 + k2 * k2;
        const double ki = i == 0 ? k0 : (i == 1 ? k1 : k2);
        // F_ij = d_i Lap^{-1} u_j  ->  -i k_i u_j / |k|^2
        w[p] = kk > 0.0 ? std::complex<double>(0.0, -ki / kk) * s[p] : std::complex<double>(0.0, 0.0);
      }
      work.backward();
      for (std::size_t p = 0; p < g.size(); ++p) out.potential(static_cast<int>(i), static_cast<int>(j), p) = w[p].real() * inv_n;
    }
  }

  // spectral divergence of F, row index summed
  for (std::size_t j = 0; j < 3; ++j) {
    auto acc = work.data();
    std::vector<std::complex<double>> sum(g.size(), 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t p = 0; p < g.size(); ++p) acc[p] = {out.potential(static_cast<int>(i), static_cast<int>(j), p), 0.0};
      work.forward();
      for (std::size_t p = 0; p < g.size(); ++p) {
        const auto c = g.coords(p);
        sum[p] += std::complex<double>(0.0, k[i][static_cast<std::size_t>(c[i])]) * acc[p];
      }
    }
    for (std::size_t p = 0; p < g.size(); ++p) acc[p] = sum[p];
    work.backward();
    for (std::size_t p = 0; p < g.size(); ++p) div.comp[j][p] = acc[p].real() * inv_n;
  }
  out.divergence_error = umax > 0.0 ? max_abs_difference(div, u) / umax : max_magnitude(div);
  if (out.divergence_error > kBmoDivergenceTolerance) {
    std::ostringstream os;
    os << "BMO^-1 proxy: div F reproduces u only to " << out.divergence_error
       << " relative (field has Nyquist content)";
    throw InvalidArgument(os.str());
  }

  // dyadic radii from a quarter of the smallest period down to 2h
  double lmin = g.period(0);
  for (int a = 1; a < 3; ++a) lmin = std::min(lmin, g.period(a));
  std::vector<double> radii;
  for (double r = lmin / 4.0; r >= 2.0 * g.h; r /= 2.0) radii.push_back(r);
  if (radii.empty() && ball_samples > 0) throw InvalidArgument("grid too coarse for BMO ball sampling");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int s = 0; s < ball_samples; ++s) {
    Ball b;
    for (std::size_t a = 0; a < 3; ++a) b.center[a] = g.origin[a] + unif(rng) * g.period(static_cast<int>(a));
    b.radius = radii[static_cast<std::size_t>(s) % radii.size()];
    const double mo = mean_oscillation(out.potential, b);
    out.samples.push_back({b, mo});
    out.seminorm = std::max(out.seminorm, mo);
  }
  return out;
}

}  // namespace toyns
