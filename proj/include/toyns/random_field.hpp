#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

#include "toyns/fft.hpp"
#include "toyns/field.hpp"

namespace toyns {

/// Integer-wavenumber shell k_min <= |m| <= k_max, with k = 2*pi*m / period.
struct WaveBand {
  double k_min = 1.0;
  double k_max = 2.0;
};

/// Band-limited, mean-zero random field on a periodic grid, scaled so that
/// max |u| equals `amplitude`. Coefficients are drawn in a fixed wavevector
/// order from a 64-bit Mersenne twister, so the field depends only on
/// (grid, seed, band, amplitude).
inline VelocityField make_random_field(const Grid3& g, std::uint64_t seed, WaveBand band, double amplitude) {
  if (!g.periodic()) throw InvalidArgument("make_random_field requires a periodic grid");
  if (!(band.k_min >= 0.0 && band.k_min <= band.k_max))
    throw InvalidArgument("make_random_field: invalid band");
  for (int a = 0; a < 3; ++a)
    if (band.k_max >= g.n[static_cast<std::size_t>(a)] / 2)
      throw InvalidArgument("make_random_field: band k_max exceeds Nyquist (n/2 - 1 = " +
                            std::to_string(g.n[static_cast<std::size_t>(a)] / 2 - 1) + ")");

  VelocityField u(g, 0.0);
  if (amplitude == 0.0) return u;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int kmax = static_cast<int>(std::floor(band.k_max));
  Fft3 fft(g.n);
  auto spec = fft.data();
  for (std::size_t c = 0; c < 3; ++c) {
    std::fill(spec.begin(), spec.end(), std::complex<double>(0.0, 0.0));
    for (int m2 = -kmax; m2 <= kmax; ++m2)
      for (int m1 = -kmax; m1 <= kmax; ++m1)
        for (int m0 = -kmax; m0 <= kmax; ++m0) {
          // upper half-space of wavevectors; the conjugate partner is implied
          const bool upper = m2 > 0 || (m2 == 0 && (m1 > 0 || (m1 == 0 && m0 > 0)));
          if (!upper) continue;
          const double mag = std::sqrt(static_cast<double>(m0 * m0 + m1 * m1 + m2 * m2));
          if (mag < band.k_min || mag > band.k_max) continue;
          const double re = normal(rng), im = normal(rng);
          const std::complex<double> a = std::complex<double>(re, im) / (mag * mag);
          auto wrap = [](int m, int n) { return ((m % n) + n) % n; };
          spec[g.index(wrap(m0, g.n[0]), wrap(m1, g.n[1]), wrap(m2, g.n[2]))] = a;
          spec[g.index(wrap(-m0, g.n[0]), wrap(-m1, g.n[1]), wrap(-m2, g.n[2]))] = std::conj(a);
        }
    fft.backward();
    for (std::size_t p = 0; p < g.size(); ++p) u.comp[c][p] = spec[p].real();
  }
  const double m = max_magnitude(u);
  if (m > 0.0) {
    const double s = amplitude / m;
    for (auto& c : u.comp)
      for (double& v : c) v *= s;
  }
  return u;
}

}  // namespace toyns
