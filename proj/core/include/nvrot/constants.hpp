#pragma once

#include <numbers>

namespace nvrot {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

namespace codata {
inline constexpr double kMu0 = 1.25663706212e-6;      // N A^-2
inline constexpr double kHbar = 1.054571817e-34;      // J s
}  // namespace codata

// Internal unit system:
//   energies       angular frequency, rad/s
//   fields         gauss
//   lengths        nm
//   times          s
// Gyromagnetic ratios are therefore in rad s^-1 G^-1.
struct PhysicalConstants {
  double gamma_e;  // NV electron
  double gamma_n;  // 13C
  double d_zfs;    // zero-field splitting
  // mu0 gamma_e gamma_n hbar / 4 pi, rad/s nm^3
  double hyperfine_prefactor;
  // mu0 gamma_n^2 hbar / 4 pi, rad/s nm^3
  double nuclear_dipolar_prefactor;
  // nearest-neighbour C-C distance, nm
  double a0;
};

namespace detail {
// rad s^-1 G^-1 -> rad s^-1 T^-1
inline constexpr double kPerGaussToPerTesla = 1e4;
inline constexpr double kCubicMetreToNm3 = 1e27;

constexpr double dipolar_prefactor(double gamma_a, double gamma_b) {
  return codata::kMu0 / (2.0 * kTwoPi) * (gamma_a * kPerGaussToPerTesla) *
         (gamma_b * kPerGaussToPerTesla) * codata::kHbar * kCubicMetreToNm3;
}
}  // namespace detail

inline constexpr PhysicalConstants make_constants(double gamma_e, double gamma_n,
                                                  double d_zfs, double a0) {
  return PhysicalConstants{
      gamma_e,
      gamma_n,
      d_zfs,
      detail::dipolar_prefactor(gamma_e, gamma_n),
      detail::dipolar_prefactor(gamma_n, gamma_n),
      a0,
  };
}

inline constexpr PhysicalConstants kDefaultConstants =
    make_constants(kTwoPi * 2.8e6, kTwoPi * 1071.5, kTwoPi * 2870e6, 0.154);

inline const PhysicalConstants& constants() { return kDefaultConstants; }

inline constexpr double hz(double angular) { return angular / kTwoPi; }
inline constexpr double angular(double hertz) { return hertz * kTwoPi; }
inline constexpr double deg(double radians) { return radians * 180.0 / std::numbers::pi; }
inline constexpr double rad(double degrees) { return degrees * std::numbers::pi / 180.0; }

}  // namespace nvrot
