/**
 * @file material.cpp
 * @brief Density evaluation, analytic derivatives, and the finite-difference
 *        quadratic tensor at the identity.
 */
#include "qsf/material.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace qsf {

void ModelParams::validate() const {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("ModelParams: epsilon must be positive");
  if (!(kappa > 0.0)) throw std::invalid_argument("ModelParams: kappa must be positive");
  if (!(r > 0.0)) throw std::invalid_argument("ModelParams: r must be positive");
  if (!(gamma > 2.0 / 3.0 && gamma < beta && beta < 1.0))
    throw std::invalid_argument(
        "ModelParams: exponents must satisfy 2/3 < gamma < beta < 1 (got gamma=" +
        std::to_string(gamma) + ", beta=" + std::to_string(beta) + ")");
}

DensityKind density_kind_from_string(const std::string& name) {
  if (name == "dist2_rotations") return DensityKind::Dist2Rotations;
  if (name == "green_lagrange") return DensityKind::GreenLagrange;
  throw std::invalid_argument("unknown density '" + name +
                              "' (expected dist2_rotations or green_lagrange)");
}

std::string to_string(DensityKind kind) {
  return kind == DensityKind::Dist2Rotations ? "dist2_rotations" : "green_lagrange";
}

namespace {

// Cofactor of a 2x2 matrix; linear in F, d(det F) = cof F : dF.
inline Mat2 cof(const Mat2& F) {
  Mat2 c;
  c << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
  return c;
}

// g = |F|^2 + 2 det F rewritten as a sum of squares (always >= 0).
inline double g_of(const Mat2& F) {
  const double t = F(0, 0) + F(1, 1);
  const double w = F(1, 0) - F(0, 1);
  return t * t + w * w;
}

inline double dist2_value(const Mat2& F) {
  const double g = g_of(F);
  const double d1 = F(0, 0) - F(1, 1);
  const double d2 = F(0, 1) + F(1, 0);
  const double m = d1 * d1 + d2 * d2;
  const double s = std::sqrt(g) - 2.0;
  return 0.5 * (s * s + m);
}

inline Mat2 dist2_gradient(const Mat2& F) {
  const double g = g_of(F);
  Mat2 grad = 2.0 * F;
  if (g > 1e-300) grad -= (2.0 / std::sqrt(g)) * (F + cof(F));
  return grad;
}

inline Mat4 dist2_second(const Mat2& F) {
  // D2W(F)[H] = 2H - (2/sqrt(g))(H + cof H) + (2/g^(3/2)) <F + cof F, H> (F + cof F)
  const double g = g_of(F);
  Mat4 D = 2.0 * Mat4::Identity();
  if (g > 1e-300) {
    const double sg = std::sqrt(g);
    Mat4 cof4;  // vec(cof H) = cof4 * vec(H)
    cof4 << 0, 0, 0, 1, 0, 0, -1, 0, 0, -1, 0, 0, 1, 0, 0, 0;
    const Vec4 p = vec_of(F + cof(F));
    D -= (2.0 / sg) * (Mat4::Identity() + cof4);
    D += (2.0 / (g * sg)) * (p * p.transpose());
  }
  return D;
}

inline double gl_value(const Mat2& F) {
  const Mat2 C = F.transpose() * F - Mat2::Identity();
  const double d = F.determinant() - 1.0;
  return C.squaredNorm() / 8.0 + 0.5 * d * d;
}

inline Mat2 gl_gradient(const Mat2& F) {
  const Mat2 C = F.transpose() * F - Mat2::Identity();
  return 0.5 * F * C + (F.determinant() - 1.0) * cof(F);
}

inline Mat4 gl_second(const Mat2& F) {
  // Directional derivative of gl_gradient, assembled column by column.
  Mat4 D;
  const Mat2 C = F.transpose() * F - Mat2::Identity();
  const double det1 = F.determinant() - 1.0;
  const Mat2 cF = cof(F);
  for (int k = 0; k < 4; ++k) {
    Vec4 e = Vec4::Zero();
    e(k) = 1.0;
    const Mat2 H = mat_of(e);
    const Mat2 dG = 0.5 * (H * C + F * (H.transpose() * F + F.transpose() * H)) +
                    cF.cwiseProduct(H).sum() * cF + det1 * cof(H);
    D.col(k) = vec_of(dG);
  }
  return 0.5 * (D + D.transpose());
}

}  // namespace

double Density::value(const Mat2& F) const {
  return kind == DensityKind::Dist2Rotations ? dist2_value(F) : gl_value(F);
}

Mat2 Density::gradient(const Mat2& F) const {
  return kind == DensityKind::Dist2Rotations ? dist2_gradient(F) : gl_gradient(F);
}

Mat4 Density::second_derivative(const Mat2& F) const {
  return kind == DensityKind::Dist2Rotations ? dist2_second(F) : gl_second(F);
}

Vec3 ElasticTensor::coords(const Mat2& A) {
  const double s12 = 0.5 * (A(0, 1) + A(1, 0));
  return Vec3(A(0, 0), A(1, 1), std::sqrt(2.0) * s12);
}

Mat2 ElasticTensor::stress(const Mat2& A) const {
  const Vec3 s = rep * coords(A);
  Mat2 out;
  const double off = s(2) / std::sqrt(2.0);
  out << s(0), off, off, s(1);
  return out;
}

double ElasticTensor::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Mat3> es(rep);
  return es.eigenvalues().minCoeff();
}

ElasticTensor linearized_tensor(const Density& density, double fd_step) {
  const double h = fd_step;
  const Mat2 id = Mat2::Identity();
  Mat4 D2 = Mat4::Zero();
  // Central second differences over the 10 unordered direction pairs.
  for (int a = 0; a < 4; ++a) {
    for (int b = a; b < 4; ++b) {
      Mat2 Ea = Mat2::Zero(), Eb = Mat2::Zero();
      Ea(a / 2, a % 2) = 1.0;
      Eb(b / 2, b % 2) = 1.0;
      const double v =
          (density.value(id + h * Ea + h * Eb) - density.value(id + h * Ea - h * Eb) -
           density.value(id - h * Ea + h * Eb) + density.value(id - h * Ea - h * Eb)) /
          (4.0 * h * h);
      D2(a, b) = v;
      D2(b, a) = v;
    }
  }

  // Skew directions must carry no energy.
  Mat2 skew;
  skew << 0.0, 1.0, -1.0, 0.0;
  const double skew_energy = vec_of(skew).dot(D2 * vec_of(skew));
  if (std::abs(skew_energy) > 1e-8 * skew.squaredNorm())
    throw std::invalid_argument("linearized_tensor: skew directions carry energy (" +
                                std::to_string(skew_energy) + ")");

  // Restrict to the symmetric basis (e11, e22, sqrt2*e12).
  const double s = 1.0 / std::sqrt(2.0);
  Mat2 B1 = Mat2::Zero(), B2 = Mat2::Zero(), B3 = Mat2::Zero();
  B1(0, 0) = 1.0;
  B2(1, 1) = 1.0;
  B3(0, 1) = s;
  B3(1, 0) = s;
  const Mat2 bases[3] = {B1, B2, B3};
  ElasticTensor tensor;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      tensor.rep(a, b) = vec_of(bases[a]).dot(D2 * vec_of(bases[b]));
  tensor.rep = 0.5 * (tensor.rep + tensor.rep.transpose()).eval();

  if (tensor.min_eigenvalue() <= 0.0)
    throw std::invalid_argument(
        "linearized_tensor: quadratic form is not positive definite on symmetric matrices");
  return tensor;
}

}  // namespace qsf
