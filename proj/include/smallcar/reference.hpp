#pragma once

// Reference vehicle: the identified parameter values of the 1:10 platform.
// The wheelbase is not measured directly; it is recovered from the reported
// yaw inertia by inverting the uniform-rectangle formula.

#include <cmath>

#include "smallcar/models.hpp"

namespace smallcar::reference {

inline constexpr double kMass = 1.67;          // kg
inline constexpr double kWidth = 0.1;          // m
inline constexpr double kYawInertia = 0.006513;  // kg m^2

/// l such that m (l^2 + w^2) / 12 == I_z (about 0.192 m).
inline double wheelbase() { return std::sqrt(12.0 * kYawInertia / kMass - kWidth * kWidth); }

inline Geometry geometry() {
  const double l = wheelbase();
  return Geometry{kMass, l, 0.5 * l, 0.5 * l, kWidth, kYawInertia};
}

inline FrictionParams friction() { return {1.72, 13.32, 0.29}; }
inline MotorParams motor() { return {28.88, 5.99, -0.15}; }
inline SteeringParams steering() { return {1.64, 0.33, 0.02, 1.66, 0.38}; }
inline TireParams tire() { return {2.98, 0.69, 0.29, -3.07, 0.39}; }
inline Delays delays() { return {0.15, 0.01}; }

inline VehicleParams params() {
  return VehicleParams{friction(), motor(), steering(), tire(), geometry(), delays()};
}

}  // namespace smallcar::reference
