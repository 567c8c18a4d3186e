/**
 * @file material.hpp
 * @brief Stored energy densities, their derivatives, and the quadratic
 *        tensor obtained by twice differentiating a density at the identity.
 *
 * The default density is the exact squared distance to the rotation group,
 * evaluated in the cancellation-free form
 *   W(F) = ((sqrt(g) - 2)^2 + m) / 2,
 *   g = (tr F)^2 + (F21 - F12)^2,  m = (F11 - F22)^2 + (F12 + F21)^2,
 * which is algebraically |F|^2 + 2 - 2*sqrt(|F|^2 + 2 det F) and vanishes
 * exactly on rotations. A quartic Green-Lagrange density is provided for
 * experiments; it grows faster than linearly in |F| at infinity, which some
 * solver estimates assume, so it is opt-in.
 */
#pragma once

#include "qsf/geometry.hpp"

#include <Eigen/Dense>
#include <string>

namespace qsf {

using Mat4 = Eigen::Matrix4d;
using Mat3 = Eigen::Matrix3d;
using Vec4 = Eigen::Vector4d;
using Vec3 = Eigen::Vector3d;

/// Model parameters shared by the nonlinear and linearized energies.
struct ModelParams {
  double epsilon = 0.1;  ///< displacement scale, > 0
  double beta = 0.8;     ///< second-gradient exponent, gamma < beta < 1
  double gamma = 0.7;    ///< cutoff exponent, 2/3 < gamma
  double kappa = 1.0;    ///< surface energy per unit crack length, > 0
  double r = 0.1;        ///< radius of the smooth well around rotations, > 0

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

enum class DensityKind {
  Dist2Rotations,  ///< squared distance to SO(2); default
  GreenLagrange,   ///< |F^T F - Id|^2 / 8 + (det F - 1)^2 / 2
};

DensityKind density_kind_from_string(const std::string& name);
std::string to_string(DensityKind kind);

/// Flatten a 2x2 matrix row-major into (F11, F12, F21, F22).
inline Vec4 vec_of(const Mat2& F) { return Vec4(F(0, 0), F(0, 1), F(1, 0), F(1, 1)); }
inline Mat2 mat_of(const Vec4& v) {
  Mat2 F;
  F << v(0), v(1), v(2), v(3);
  return F;
}

/// Frame-indifferent stored energy density with analytic derivatives.
struct Density {
  DensityKind kind = DensityKind::Dist2Rotations;

  double value(const Mat2& F) const;
  Mat2 gradient(const Mat2& F) const;
  /// Second derivative as a 4x4 matrix acting on vec_of(H).
  Mat4 second_derivative(const Mat2& F) const;
};

/**
 * Quadratic form of the linearized model in the basis (e11, e22, sqrt2*e12).
 * quadratic(A) depends on A only through its symmetric part and is positive
 * definite on symmetric matrices.
 */
struct ElasticTensor {
  Mat3 rep = 2.0 * Mat3::Identity();

  /// (a11, a22, sqrt2*a12) coordinates of sym A.
  static Vec3 coords(const Mat2& A);
  double quadratic(const Mat2& A) const { return coords(A).dot(rep * coords(A)); }
  /// Bilinear pairing C sym A : sym B.
  double pairing(const Mat2& A, const Mat2& B) const {
    return coords(A).dot(rep * coords(B));
  }
  /// C : sym A as a symmetric 2x2 matrix.
  Mat2 stress(const Mat2& A) const;
  double min_eigenvalue() const;
};

/**
 * Second derivative of the density at the identity, computed by central
 * finite differences (step 1e-4) over the 10 unordered direction pairs and
 * symmetrized. Validates that skew directions carry no energy (tolerance
 * 1e-8 per unit squared norm) and that the form is positive definite on
 * symmetric matrices; throws std::invalid_argument otherwise.
 */
ElasticTensor linearized_tensor(const Density& density, double fd_step = 1e-4);

}  // namespace qsf
