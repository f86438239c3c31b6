#pragma once

namespace qswitch::model {

/// Bessel function of the first kind, order zero.  Absolute error below 1e-10
/// for |x| <= 20.  Throws InvalidArgument on non-finite input.
double bessel_j0(double x);

/// Bessel function of the first kind, order one.
double bessel_j1(double x);

/// First positive zero of J0.
inline constexpr double kBesselJ0FirstZero = 2.404825557695773;

}  // namespace qswitch::model
