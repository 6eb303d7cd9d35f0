#pragma once

#include "isocost/model.hpp"
#include "isocost/types.hpp"

namespace isocost {

// Data for the continuous-time algebraic Riccati equation
//   A'P + PA - P B R^-1 B' P + Q = 0
// with cost convention x'Qx + u'Ru (no 1/2 factor).
struct LinearQuadraticProblem {
  MatrixXd A;
  MatrixXd B;
  MatrixXd Q;
  MatrixXd R;
};

// Stabilizing solution of the Riccati equation. A stabilizing iterate is
// first reached by integrating the differential Riccati equation from P = 0,
// then polished with Newton-Kleinman iterations until the residual drops
// below residual_tol. Throws UsageError on malformed inputs (dimensions,
// asymmetry, R not positive definite) and ConvergenceError when no
// stabilizing solution is found.
MatrixXd solve_care(const LinearQuadraticProblem& prob, double residual_tol = 1e-9,
                    int max_iterations = 100);

// Frobenius norm of the Riccati residual at P.
double care_residual(const LinearQuadraticProblem& prob, const MatrixXd& P);

// K = R^-1 B' P, the feedback gain of u = -Kx.
MatrixXd lqr_gain(const MatrixXd& P, const MatrixXd& B, const MatrixXd& R);

// Solves A'X + XA + Q = 0 by Kronecker vectorization (dense, meant for the
// small state dimensions used here). Throws NumericalError when the Lyapunov
// operator is singular.
MatrixXd solve_lyapunov(const MatrixXd& A, const MatrixXd& Q);

bool is_hurwitz(const MatrixXd& M, double margin = 0.0);

struct Linearization {
  MatrixXd A;
  MatrixXd B;
};

// Central finite differences of the dynamics around (x_eq, u_eq).
Linearization linearize(const SystemModel& model, const VectorXd& x_eq, const VectorXd& u_eq,
                        double eps = 1e-5);

struct QuadraticCost {
  MatrixXd Q;
  MatrixXd R;
};

// Second-order finite differences of the cost rate around (x_eq, u_eq),
// returning g ~ x'Qx + u'Ru. Significant state-control cross curvature has no
// home in this form and raises NumericalError.
QuadraticCost approximate_quadratic_cost(const SystemModel& model, const VectorXd& x_eq,
                                         const VectorXd& u_eq, double eps = 1e-4);

// Convenience: linearize the model at the origin, extract the quadratic cost,
// solve the Riccati equation and wrap u = -Kx as a control law.
struct LqrDesign {
  Linearization lin;
  QuadraticCost cost;
  MatrixXd P;
  MatrixXd K;
};

LqrDesign design_lqr(const SystemModel& model, double fd_eps = 1e-5);
ControlLaw lqr_law(const SystemModel& model, double fd_eps = 1e-5);

}  // namespace isocost
