#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace autocalib {

// Relative imaginary part below which a complex-conjugate root pair is taken
// as a (double) real root.
inline constexpr double kImagRootTolerance = 1e-9;

// Real roots of sum_i coeffs[i] * x^i for degree <= 3, ascending order.
// Leading coefficients that are negligible relative to the largest one are
// dropped. Returns an empty vector when no real root exists or the polynomial
// is identically zero.
std::vector<double> RealPolynomialRoots(std::span<const double> coeffs,
                                        double imag_tol = kImagRootTolerance);

// Coefficients (ascending powers of lambda) of det(M + lambda * W) where W is
// zero except for an identity block on indices [first_constrained, n). Each
// coefficient is a sum of principal minors of M.
std::vector<double> SelectorDeterminantPolynomial(const Eigen::MatrixXd& m,
                                                  int first_constrained);

struct QcqpCandidate {
  double lambda = 0.0;
  Eigen::VectorXd phi;  // phi(0) >= 0, unit norm on the constrained block
  double cost = 0.0;    // phi^T M phi
  // sigma_{n-2} / sigma_max of M + lambda W; a one-dimensional kernel needs
  // this well above the rank tolerance.
  double kernel_margin = 0.0;
  bool degenerate = false;
};

struct QcqpResult {
  std::vector<double> polynomial;  // normalized det(M + lambda W) coefficients
  std::vector<QcqpCandidate> candidates;
};

// Stationary points of  min phi^T M phi  s.t.  ||phi[first_constrained:]|| = 1
// via the Lagrange condition det(M + lambda W) = 0. Each candidate is the
// kernel vector of M + lambda* W, scaled so its constrained block has unit norm
// and its first entry is non-negative. Throws kDegenerate when the
// determinant vanishes identically and kConditioning when it has no real
// root.
QcqpResult SolveUnitBlockQcqp(const Eigen::MatrixXd& m, int first_constrained,
                              double rank_tolerance);

}  // namespace autocalib
