#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vbcast/analytic.hpp"
#include "vbcast/operators.hpp"

namespace vbcast {

// ---------------------------------------------------------------------------
// Dual certificates for the two receiver problem
// ---------------------------------------------------------------------------

/// Dual feasible point for the two receiver problem. x and y weight the two
/// receiver overlap operators, z is the spectral shift, theta records the
/// cone boundary parameter the point was generated from, and c is the
/// certified objective value 1 - d z + e x + f y with e = d^2 (1 - eps2) and
/// f = d^2 (1 - eps1). Any feasible point lower bounds the optimal overhead.
struct DualCertificateAbc {
  double theta = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double c = 0.0;
};

/// Dual point on the cone boundary at angle theta. For values of theta whose
/// profile 2 f(theta) - 1 stays below the trivial bound this returns the
/// origin certificate (x = y = z = 0, c = 1) instead, which is always
/// feasible. Points generated at cosh(theta) <= d are feasible by
/// construction.
DualCertificateAbc abc_certificate_from_theta(const AbcProblem& problem, double theta);

/// Feasibility audit of a dual point: checks 2/d >= z >= 0 together with the
/// spectral sandwich z >= lambda_max(M) and z - 2/d <= lambda_min(M) for the
/// pencil M = x Gamma_{02} + y Gamma_{01}. The pencil spectrum is evaluated
/// both in closed form and with the dense eigensolver; the reported
/// violation is the worse of the two.
struct DualFeasibilityReport {
  bool feasible = false;
  double objective = 0.0;
  double max_violation = 0.0;
};
DualFeasibilityReport abc_dual_feasibility(const AbcProblem& problem,
                                           const DualCertificateAbc& cert, double tol = 1e-9);

/// Maximise the dual profile by golden section search over theta, bracketing
/// around the closed form maximiser. Converges to width `tol` or throws
/// numeric_error carrying the best iterate seen. The certificate of the
/// returned value is attached to the result.
OverheadResult abc_dual_theta_search(const AbcProblem& problem, double tol = 1e-10);

/// Exact corner solve of the N receiver probabilistic linear program. The
/// optimal corner is evaluated in rational arithmetic through the same
/// shared expression as s_n_closed, so the two routes agree bit for bit.
OverheadResult pbc_lp_solve(const PbcProblem& problem);

// ---------------------------------------------------------------------------
// Semidefinite programming
// ---------------------------------------------------------------------------

/// One affine constraint <matrix, X> (= or <=) rhs under the Hilbert-Schmidt
/// pairing <A, X> = Tr[A X] with Hermitian A.
struct LinearConstraint {
  Eigen::MatrixXcd matrix;
  double rhs = 0.0;
};

/// minimise <objective, X> over Hermitian positive semidefinite X subject to
/// equality and inequality constraints. Serialisable to JSON.
struct SdpStandardForm {
  int dim = 0;
  Eigen::MatrixXcd objective;
  std::vector<LinearConstraint> equalities;
  std::vector<LinearConstraint> inequalities;
};

std::string to_json_string(const SdpStandardForm& form, int indent = -1);
SdpStandardForm sdp_from_json_string(const std::string& text);

/// Primal broadcast problem with approximate universal targets as one block
/// diagonal PSD variable. Block layout on the diagonal, with m = d^(n+1):
/// [J1 (m x m), J2 (m x m), a (1 x 1), b (1 x 1)]. Off block entries are
/// pinned to zero by equalities, both J blocks are restricted to the twirl
/// invariant span, each J block must have input marginal equal to its scalar
/// slot times the identity, receiver marginals of J1 - J2 must match the
/// depolarizing targets derived from eps, and a - b = 1.
SdpStandardForm build_abc_primal_sdp(int d, int n, const std::vector<double>& eps);

/// Probabilistic variant. Block layout, with m = d^(n+1):
/// [J1, J2, a, b, S1 (d x d), S2 (d x d), s_ab (1 x 1)] where the S blocks
/// are the slacks of the operator inequalities Tr_outs[J_i] <= a(resp b) 1
/// and s_ab is the slack of a - b <= 1. Receiver marginals of J1 - J2 must
/// equal p times the maximally entangled operator.
SdpStandardForm build_pbc_primal_sdp(int d, int n, double p);

/// Diagonal blocks of a solver witness in the layout produced by the two
/// builders above.
struct WitnessChannels {
  double a = 0.0;
  double b = 0.0;
  MultipartiteOperator j1 = MultipartiteOperator::zero({1});
  MultipartiteOperator j2 = MultipartiteOperator::zero({1});
};
WitnessChannels extract_witness_channels(const Eigen::MatrixXcd& witness, int d, int n);

enum class SdpStatus { optimal, infeasible, unbounded, numeric_failure };

const char* sdp_status_name(SdpStatus status);

struct SdpSolution {
  SdpStatus status = SdpStatus::numeric_failure;
  double value = 0.0;
  Eigen::MatrixXcd witness;
  int iterations = 0;          // total Newton steps across both phases
  double eq_residual = 0.0;    // max equality violation of the witness
  double min_eigenvalue = 0.0; // smallest eigenvalue of the witness
};

/// Interior point solve of the standard form by a logarithmic barrier with
/// Newton steps on the equality-eliminated variables. Suitable for the small
/// structured problems built above: the PSD side is capped at 128 and the
/// reduced variable count at 300. The duality gap at exit is below tol.
SdpSolution sdp_barrier_solve(const SdpStandardForm& form, double tol = 1e-6);

}  // namespace vbcast
