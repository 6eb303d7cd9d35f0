#include "isocost/lqr.hpp"

#include "isocost/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace isocost {

namespace {

void validate(const LinearQuadraticProblem& prob) {
  const auto n = prob.A.rows();
  if (prob.A.cols() != n || n == 0) throw UsageError("solve_care: A must be square");
  if (prob.B.rows() != n) throw UsageError("solve_care: B row count must match A");
  const auto m = prob.B.cols();
  if (m == 0) throw UsageError("solve_care: B must have at least one column");
  if (prob.Q.rows() != n || prob.Q.cols() != n) throw UsageError("solve_care: Q must be n x n");
  if (prob.R.rows() != m || prob.R.cols() != m) throw UsageError("solve_care: R must be m x m");
  if ((prob.Q - prob.Q.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw UsageError("solve_care: Q must be symmetric");
  }
  if ((prob.R - prob.R.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw UsageError("solve_care: R must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> q_eig(0.5 * (prob.Q + prob.Q.transpose()));
  if (q_eig.eigenvalues().minCoeff() < -1e-9) {
    throw UsageError("solve_care: Q must be positive semidefinite");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> r_eig(0.5 * (prob.R + prob.R.transpose()));
  if (r_eig.eigenvalues().minCoeff() <= 0.0) {
    throw UsageError("solve_care: R must be positive definite");
  }
}

MatrixXd riccati_rhs(const LinearQuadraticProblem& prob, const MatrixXd& P,
                     const MatrixXd& R_inv) {
  return prob.A.transpose() * P + P * prob.A -
         P * prob.B * R_inv * prob.B.transpose() * P + prob.Q;
}

}  // namespace

double care_residual(const LinearQuadraticProblem& prob, const MatrixXd& P) {
  const MatrixXd R_inv = prob.R.inverse();
  return riccati_rhs(prob, P, R_inv).norm();
}

MatrixXd lqr_gain(const MatrixXd& P, const MatrixXd& B, const MatrixXd& R) {
  if (P.rows() != P.cols() || B.rows() != P.rows() || R.rows() != R.cols() ||
      R.rows() != B.cols()) {
    throw UsageError("lqr_gain: inconsistent dimensions");
  }
  Eigen::FullPivLU<MatrixXd> lu(R);
  if (!lu.isInvertible()) throw UsageError("lqr_gain: R is singular");
  return lu.solve(B.transpose() * P);
}

MatrixXd solve_lyapunov(const MatrixXd& A, const MatrixXd& Q) {
  const auto n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n) {
    throw UsageError("solve_lyapunov: A and Q must be square with equal size");
  }
  // Kronecker form of X -> A'X + XA acting on vec(X), column-major:
  // (I (x) A') + (A' (x) I).
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd At = A.transpose();
  MatrixXd op = MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      op.block(i * n, j * n, n, n) = At(i, j) * I;
      if (i == j) op.block(i * n, j * n, n, n) += At;
    }
  }
  Eigen::FullPivLU<MatrixXd> lu(op);
  if (!lu.isInvertible()) {
    throw NumericalError("solve_lyapunov: operator is singular (A has mirrored eigenvalues)");
  }
  Eigen::Map<const VectorXd> q_vec(Q.data(), n * n);
  VectorXd x_vec = lu.solve(-q_vec);
  MatrixXd X = Eigen::Map<MatrixXd>(x_vec.data(), n, n);
  return 0.5 * (X + X.transpose()).eval();
}

bool is_hurwitz(const MatrixXd& M, double margin) {
  Eigen::EigenSolver<MatrixXd> eig(M);
  return eig.eigenvalues().real().maxCoeff() < -margin;
}

MatrixXd solve_care(const LinearQuadraticProblem& prob, double residual_tol, int max_iterations) {
  validate(prob);
  const auto n = prob.A.rows();
  const MatrixXd R_inv = prob.R.inverse();

  // Phase 1: march the differential Riccati equation dP/dt = rhs(P) from
  // P = 0. P(t) is the finite-horizon value matrix, so if a stabilizing
  // solution exists the induced gain eventually stabilizes A - B K.
  MatrixXd P = MatrixXd::Zero(n, n);
  const double dt = 0.01;
  const int check_every = 10;
  const int max_march_steps = 200000;
  bool stabilizing = false;
  for (int step = 0; step <= max_march_steps; ++step) {
    if (step % check_every == 0) {
      const MatrixXd K = R_inv * prob.B.transpose() * P;
      if (is_hurwitz(prob.A - prob.B * K)) {
        stabilizing = true;
        break;
      }
    }
    const MatrixXd k1 = riccati_rhs(prob, P, R_inv);
    const MatrixXd k2 = riccati_rhs(prob, P + 0.5 * dt * k1, R_inv);
    const MatrixXd k3 = riccati_rhs(prob, P + 0.5 * dt * k2, R_inv);
    const MatrixXd k4 = riccati_rhs(prob, P + dt * k3, R_inv);
    P += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    P = 0.5 * (P + P.transpose()).eval();
    if (!P.allFinite()) {
      throw ConvergenceError(
          "solve_care: value matrix diverged while marching; (A, B) appears not stabilizable");
    }
  }
  if (!stabilizing) {
    throw ConvergenceError("solve_care: no stabilizing gain found; (A, B) appears not "
                           "stabilizable or marching budget too small");
  }

  // Phase 2: Newton-Kleinman. Each iterate solves the Lyapunov equation
  // (A - B K)' P + P (A - B K) + Q + K' R K = 0 and refreshes K; convergence
  // is quadratic from a stabilizing start.
  for (int it = 0; it < max_iterations; ++it) {
    const MatrixXd K = R_inv * prob.B.transpose() * P;
    const MatrixXd F = prob.A - prob.B * K;
    if (!is_hurwitz(F)) {
      throw ConvergenceError("solve_care: iteration left the stabilizing region");
    }
    P = solve_lyapunov(F, prob.Q + K.transpose() * prob.R * K);
    const double res = riccati_rhs(prob, P, R_inv).norm();
    if (res <= residual_tol) return P;
  }
  std::ostringstream os;
  os << "solve_care: residual " << riccati_rhs(prob, P, R_inv).norm() << " still above "
     << residual_tol << " after " << max_iterations << " iterations";
  throw ConvergenceError(os.str());
}

Linearization linearize(const SystemModel& model, const VectorXd& x_eq, const VectorXd& u_eq,
                        double eps) {
  if (!(eps > 0.0)) throw UsageError("linearize: eps must be > 0");
  const double drift = eval_dynamics(model, x_eq, u_eq).norm();
  if (!(drift <= 1e-8)) {
    std::ostringstream os;
    os << "linearize: (x_eq, u_eq) is not an equilibrium; ||f|| = " << drift;
    throw UsageError(os.str());
  }
  Linearization lin;
  lin.A.resize(model.state_dim, model.state_dim);
  lin.B.resize(model.state_dim, model.control_dim);
  for (int j = 0; j < model.state_dim; ++j) {
    VectorXd xp = x_eq, xm = x_eq;
    xp(j) += eps;
    xm(j) -= eps;
    lin.A.col(j) = (eval_dynamics(model, xp, u_eq) - eval_dynamics(model, xm, u_eq)) / (2.0 * eps);
  }
  for (int j = 0; j < model.control_dim; ++j) {
    VectorXd up = u_eq, um = u_eq;
    up(j) += eps;
    um(j) -= eps;
    lin.B.col(j) = (eval_dynamics(model, x_eq, up) - eval_dynamics(model, x_eq, um)) / (2.0 * eps);
  }
  return lin;
}

QuadraticCost approximate_quadratic_cost(const SystemModel& model, const VectorXd& x_eq,
                                         const VectorXd& u_eq, double eps) {
  if (!(eps > 0.0)) throw UsageError("approximate_quadratic_cost: eps must be > 0");
  const int n = model.state_dim;
  const int m = model.control_dim;
  const double g0 = eval_cost_rate(model, x_eq, u_eq);

  auto g_at = [&](const VectorXd& x, const VectorXd& u) { return eval_cost_rate(model, x, u); };

  MatrixXd H_xx(n, n), H_uu(m, m), H_xu(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      VectorXd xpp = x_eq, xpm = x_eq, xmp = x_eq, xmm = x_eq;
      xpp(i) += eps; xpp(j) += eps;
      xpm(i) += eps; xpm(j) -= eps;
      xmp(i) -= eps; xmp(j) += eps;
      xmm(i) -= eps; xmm(j) -= eps;
      double h;
      if (i == j) {
        VectorXd xp = x_eq, xm = x_eq;
        xp(i) += eps;
        xm(i) -= eps;
        h = (g_at(xp, u_eq) - 2.0 * g0 + g_at(xm, u_eq)) / (eps * eps);
      } else {
        h = (g_at(xpp, u_eq) - g_at(xpm, u_eq) - g_at(xmp, u_eq) + g_at(xmm, u_eq)) /
            (4.0 * eps * eps);
      }
      H_xx(i, j) = h;
      H_xx(j, i) = h;
    }
  }
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      double h;
      if (i == j) {
        VectorXd up = u_eq, um = u_eq;
        up(i) += eps;
        um(i) -= eps;
        h = (g_at(x_eq, up) - 2.0 * g0 + g_at(x_eq, um)) / (eps * eps);
      } else {
        VectorXd upp = u_eq, upm = u_eq, ump = u_eq, umm = u_eq;
        upp(i) += eps; upp(j) += eps;
        upm(i) += eps; upm(j) -= eps;
        ump(i) -= eps; ump(j) += eps;
        umm(i) -= eps; umm(j) -= eps;
        h = (g_at(x_eq, upp) - g_at(x_eq, upm) - g_at(x_eq, ump) + g_at(x_eq, umm)) /
            (4.0 * eps * eps);
      }
      H_uu(i, j) = h;
      H_uu(j, i) = h;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      VectorXd xp = x_eq, xm = x_eq;
      xp(i) += eps;
      xm(i) -= eps;
      VectorXd up = u_eq, um = u_eq;
      up(j) += eps;
      um(j) -= eps;
      H_xu(i, j) =
          (g_at(xp, up) - g_at(xp, um) - g_at(xm, up) + g_at(xm, um)) / (4.0 * eps * eps);
    }
  }
  if (H_xu.cwiseAbs().maxCoeff() > 1e-6) {
    throw NumericalError(
        "approximate_quadratic_cost: cost rate has state-control cross curvature; the "
        "x'Qx + u'Ru form cannot represent it");
  }
  QuadraticCost qc;
  qc.Q = 0.5 * H_xx;
  qc.R = 0.5 * H_uu;
  return qc;
}

LqrDesign design_lqr(const SystemModel& model, double fd_eps) {
  LqrDesign d;
  const VectorXd x0 = VectorXd::Zero(model.state_dim);
  const VectorXd u0 = VectorXd::Zero(model.control_dim);
  d.lin = linearize(model, x0, u0, fd_eps);
  d.cost = approximate_quadratic_cost(model, x0, u0);
  LinearQuadraticProblem prob{d.lin.A, d.lin.B, d.cost.Q, d.cost.R};
  d.P = solve_care(prob);
  d.K = lqr_gain(d.P, d.lin.B, d.cost.R);
  return d;
}

ControlLaw lqr_law(const SystemModel& model, double fd_eps) {
  const LqrDesign d = design_lqr(model, fd_eps);
  ControlLaw law;
  law.label = "lqr:" + model.label;
  MatrixXd K = d.K;
  law.fn = [K](const VectorXd& x) { return VectorXd(-(K * x)); };
  return law;
}

}  // namespace isocost
