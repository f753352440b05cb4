#include "autocalib/qcqp.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "autocalib/error.h"

namespace autocalib {

namespace {

// Leading coefficients smaller than this (relative to the largest) lower the
// effective degree of the polynomial.
constexpr double kNegligibleCoefficient = 1e-14;

double EvalPolynomial(std::span<const double> c, double x) {
  double value = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    value = value * x + *it;
  }
  return value;
}

double EvalDerivative(std::span<const double> c, double x) {
  double value = 0.0;
  for (size_t i = c.size(); i-- > 1;) {
    value = value * x + static_cast<double>(i) * c[i];
  }
  return value;
}

// A couple of Newton steps, kept only while they reduce |p(x)|.
double PolishRoot(std::span<const double> c, double x) {
  for (int iter = 0; iter < 3; ++iter) {
    const double f = EvalPolynomial(c, x);
    const double df = EvalDerivative(c, x);
    if (f == 0.0 || df == 0.0) {
      break;
    }
    const double next = x - f / df;
    if (std::abs(EvalPolynomial(c, next)) >= std::abs(f)) {
      break;
    }
    x = next;
  }
  return x;
}

bool NearlyReal(double re, double im, double imag_tol) {
  return std::abs(im) <= imag_tol * std::max(std::abs(re), 1e-300) ||
         std::abs(im) == 0.0;
}

void QuadraticRoots(double a, double b, double c, double imag_tol,
                    std::vector<double>& roots) {
  const double disc = b * b - 4.0 * a * c;
  if (disc >= 0.0) {
    // Numerically stable form that avoids cancellation.
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    if (q != 0.0) {
      roots.push_back(q / a);
      roots.push_back(c / q);
    } else {
      roots.push_back(0.0);
      roots.push_back(0.0);
    }
    return;
  }
  const double re = -b / (2.0 * a);
  const double im = std::sqrt(-disc) / (2.0 * std::abs(a));
  if (NearlyReal(re, im, imag_tol)) {
    roots.push_back(re);
    roots.push_back(re);
  }
}

void CubicRoots(double a, double b, double c, double d, double imag_tol,
                std::vector<double>& roots) {
  // Depressed cubic t^3 + p t + q with x = t - b / (3a).
  const double bn = b / a;
  const double cn = c / a;
  const double dn = d / a;
  const double shift = bn / 3.0;
  const double p = cn - bn * bn / 3.0;
  const double q = 2.0 * bn * bn * bn / 27.0 - bn * cn / 3.0 + dn;
  const double half_q = 0.5 * q;
  const double third_p = p / 3.0;
  const double disc = half_q * half_q + third_p * third_p * third_p;

  if (disc <= 0.0) {
    // Three real roots (trigonometric form).
    if (p == 0.0) {
      roots.insert(roots.end(), 3, -shift);
      return;
    }
    const double r = std::sqrt(-third_p);
    const double arg = std::clamp(-half_q / (r * r * r), -1.0, 1.0);
    const double phi = std::acos(arg);
    for (int k = 0; k < 3; ++k) {
      roots.push_back(2.0 * r *
                          std::cos((phi - 2.0 * std::numbers::pi * k) / 3.0) -
                      shift);
    }
    return;
  }
  // One real root plus a complex pair (Cardano).
  const double sq = std::sqrt(disc);
  const double u = std::cbrt(-half_q + sq);
  const double v = std::cbrt(-half_q - sq);
  roots.push_back(u + v - shift);
  const double re = -0.5 * (u + v) - shift;
  const double im = 0.5 * std::sqrt(3.0) * (u - v);
  if (NearlyReal(re, im, imag_tol)) {
    roots.push_back(re);
    roots.push_back(re);
  }
}

}  // namespace

std::vector<double> RealPolynomialRoots(std::span<const double> coeffs,
                                        double imag_tol) {
  if (coeffs.size() > 4) {
    Fail(ErrorCode::kInvalidArgument, "only polynomials up to degree 3");
  }
  double largest = 0.0;
  for (double c : coeffs) {
    largest = std::max(largest, std::abs(c));
  }
  std::vector<double> roots;
  if (largest == 0.0) {
    return roots;
  }
  size_t size = coeffs.size();
  while (size > 0 && std::abs(coeffs[size - 1]) <= kNegligibleCoefficient * largest) {
    --size;
  }
  const std::span<const double> c = coeffs.first(size);
  switch (size) {
    case 0:
    case 1:
      return roots;
    case 2:
      roots.push_back(-c[0] / c[1]);
      break;
    case 3:
      QuadraticRoots(c[2], c[1], c[0], imag_tol, roots);
      break;
    case 4:
      CubicRoots(c[3], c[2], c[1], c[0], imag_tol, roots);
      break;
  }
  for (double& r : roots) {
    r = PolishRoot(c, r);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

std::vector<double> SelectorDeterminantPolynomial(const Eigen::MatrixXd& m,
                                                  int first_constrained) {
  const int n = static_cast<int>(m.rows());
  const int k = n - first_constrained;
  std::vector<double> coeffs(static_cast<size_t>(k) + 1, 0.0);
  // Expanding det(M + lambda W) along the selected diagonal entries: the
  // coefficient of lambda^r collects the principal minors of M with r of the
  // constrained indices removed.
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    std::vector<int> keep;
    for (int i = 0; i < n; ++i) {
      const bool constrained = i >= first_constrained;
      if (!constrained || !(mask & (1u << (i - first_constrained)))) {
        keep.push_back(i);
      }
    }
    double minor = 1.0;
    if (!keep.empty()) {
      Eigen::MatrixXd sub(keep.size(), keep.size());
      for (size_t r = 0; r < keep.size(); ++r) {
        for (size_t c = 0; c < keep.size(); ++c) {
          sub(r, c) = m(keep[r], keep[c]);
        }
      }
      minor = sub.determinant();
    }
    coeffs[static_cast<size_t>(std::popcount(mask))] += minor;
  }
  return coeffs;
}

QcqpResult SolveUnitBlockQcqp(const Eigen::MatrixXd& m, int first_constrained,
                              double rank_tolerance) {
  const int n = static_cast<int>(m.rows());
  const double norm = m.diagonal().cwiseAbs().maxCoeff();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    Fail(ErrorCode::kDegenerate, "quadratic form is identically zero");
  }
  const Eigen::MatrixXd mn = m / norm;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  w.diagonal().tail(n - first_constrained).setOnes();

  QcqpResult result;
  result.polynomial = SelectorDeterminantPolynomial(mn, first_constrained);
  double largest = 0.0;
  for (double c : result.polynomial) {
    largest = std::max(largest, std::abs(c));
  }
  if (largest <= kNegligibleCoefficient) {
    Fail(ErrorCode::kDegenerate,
         "det(M + lambda W) vanishes for every lambda; the kernel is never "
         "one-dimensional");
  }
  const std::vector<double> roots = RealPolynomialRoots(result.polynomial);
  if (roots.empty()) {
    Fail(ErrorCode::kConditioning, "det(M + lambda W) = 0 has no real root");
  }

  for (double lambda : roots) {
    // Refine lambda on the eigenvalue closest to zero, then take the kernel
    // from the smallest singular value.
    for (int iter = 0; iter < 3; ++iter) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mn + lambda * w);
      Eigen::Index idx = 0;
      eig.eigenvalues().cwiseAbs().minCoeff(&idx);
      const double mu = eig.eigenvalues()(idx);
      const Eigen::VectorXd v = eig.eigenvectors().col(idx);
      const double slope = v.dot(w * v);
      if (mu == 0.0 || slope <= 0.0) {
        break;
      }
      const double next = lambda - mu / slope;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_next(mn + next * w,
                                                              Eigen::EigenvaluesOnly);
      if (eig_next.eigenvalues().cwiseAbs().minCoeff() >= std::abs(mu)) {
        break;
      }
      lambda = next;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(mn + lambda * w, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    QcqpCandidate cand;
    cand.lambda = lambda * norm;
    cand.kernel_margin = sv(0) > 0.0 ? sv(n - 2) / sv(0) : 0.0;
    cand.degenerate = cand.kernel_margin < rank_tolerance;
    const Eigen::VectorXd gamma = svd.matrixV().col(n - 1);
    const double block_norm = gamma.tail(n - first_constrained).norm();
    if (block_norm == 0.0) {
      cand.degenerate = true;
      cand.phi = gamma;
    } else {
      const double sign = gamma(0) < 0.0 ? -1.0 : 1.0;
      cand.phi = (sign / block_norm) * gamma;
    }
    cand.cost = cand.phi.dot(m * cand.phi);
    result.candidates.push_back(std::move(cand));
  }
  return result;
}

}  // namespace autocalib
