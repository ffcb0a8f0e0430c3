#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vbcast/rational.hpp"

namespace vbcast {

/// Two receiver broadcast problem with approximate universal targets: the
/// marginal channel seen by receiver i must be depolarizing with fidelity
/// shortfall at most eps_i, where eps = 0 demands a perfect wire and the
/// upper limit 1 - 1/d^2 corresponds to the fully depolarizing channel.
struct AbcProblem {
  AbcProblem(int d, double eps1, double eps2);

  int d;
  double eps1;
  double eps2;
};

/// N receiver broadcast problem with probabilistic targets: each receiver
/// marginal of the simulated map must equal p times the unnormalised
/// maximally entangled operator, i.e. a perfect wire heralded with
/// probability p.
struct PbcProblem {
  PbcProblem(int d, int n, double p);

  int d;
  int n;
  double p;
};

enum class OverheadMethod { closed_form, theta_search, lp_corner, sdp_oracle };

const char* overhead_method_name(OverheadMethod method);

/// Optimal sampling overhead together with the route that produced it and,
/// where the route yields one, a key/value optimality certificate.
struct OverheadResult {
  double value = 0.0;
  OverheadMethod method = OverheadMethod::closed_form;
  std::map<std::string, double> certificate;
};

// ---------------------------------------------------------------------------
// Closed forms for the two receiver problem
// ---------------------------------------------------------------------------

/// Optimal overhead of the two receiver problem in closed form,
/// max(2 f* - 1, 1) with f* given by f_max_closed.
double u2_closed(const AbcProblem& problem);

/// Algebraically rearranged version of u2_closed that exposes the exact
/// noiseless value (3d - 1)/(d + 1) plus a nonnegative asymmetry term.
/// Agrees with u2_closed to within a relative 1e-12.
double u2_closed_alternate(const AbcProblem& problem);

/// Noiseless two receiver overhead (3d - 1) / (d + 1).
double v2_exact(int d);

/// Conversion between a fidelity shortfall eps and the depolarizing
/// parameter p of the corresponding marginal target: p = d^2 eps / (d^2 - 1).
double eps_to_p(int d, double eps);
double p_to_eps(int d, double p);

/// Coefficients of the reduced second order cone form of the two receiver
/// dual: objective slope g along the symmetric direction, slope h along the
/// antisymmetric one, and the cone aspect k = sqrt(d^2 - 1).
struct SocpCoefficients {
  double g = 0.0;
  double h = 0.0;
  double k = 0.0;
};
SocpCoefficients socp_coeffs(const AbcProblem& problem);

/// Dual objective profile along the hyperbolic parametrisation of the cone
/// boundary: f(theta) = (g + h sinh theta) / (d + cosh theta). Strictly
/// unimodal in theta with a unique maximiser.
double f_theta(const AbcProblem& problem, double theta);

/// Unique maximiser of f_theta, in closed form.
double theta_star(const AbcProblem& problem);

/// Maximum of f_theta: (d^2 (t1 + t2) - 2 d sqrt(t1 t2)) / (d^2 - 1) with
/// t_i = 1 - eps_i.
double f_max_closed(const AbcProblem& problem);

// ---------------------------------------------------------------------------
// N receiver probabilistic closed forms
// ---------------------------------------------------------------------------

/// Exact overhead over p for the N receiver probabilistic problem:
/// (2 d N - L) / L with L = N + d - 1, as a reduced fraction.
Rational s_n_over_p(int d, int n);

/// Overhead of the N receiver probabilistic problem, p times s_n_over_p.
double s_n_closed(int d, int n, double p);

// ---------------------------------------------------------------------------
// Sample efficiency
// ---------------------------------------------------------------------------

/// Rate comparison for virtual broadcast against sequential single copy
/// estimation. eps holds one shortfall per receiver; for more than two
/// receivers the overhead value cannot be derived here and must be supplied
/// through v_n (a dependency_error is raised otherwise).
struct RateSummary {
  double overhead = 0.0;
  double rate = 0.0;
  double naive_rate = 0.0;
  double threshold = 0.0;
  bool sample_efficient = false;
};
RateSummary se_abc(int d, const std::vector<double>& eps,
                   std::optional<double> v_n = std::nullopt, double n_q = 1.0);

/// Estimation rate (1 - mean eps) / (overhead^2 n_q) and the sequential
/// baseline 1 / (N n_q).
double rate_abc(int d, const std::vector<double>& eps,
                std::optional<double> v_n = std::nullopt, double n_q = 1.0);
double rate_naive(int n, double n_q = 1.0);

/// Measurement cost of the probabilistic protocol out to accuracy parity:
/// s_N(p)^2 / p^4 times the per copy cost.
double n_prob(const PbcProblem& problem, double n_q = 1.0);

/// Exact value of n_prob at p = 1 and n_q = 1 as a reduced fraction.
Rational n_prob_exact(int d, int n);

/// Strict sample efficiency test for the probabilistic protocol:
/// n_prob < N n_q.
bool se_pbc(const PbcProblem& problem, double n_q = 1.0);

/// Dimension threshold equivalent to se_pbc at given N and p: the protocol
/// is sample efficient exactly when d stays strictly below
/// (N - 1)(p sqrt N + 1) / (2 N - p sqrt N - 1).
double se_pbc_dimension_threshold(int n, double p);

/// Threshold at the most favourable heralding (p = 1) for the smallest
/// broadcast (N = 2): (1 + sqrt 2) / (3 - sqrt 2), roughly 1.52. No integer
/// dimension satisfies it, so two receiver probabilistic broadcast is never
/// sample efficient.
double two_receiver_no_go_threshold();

/// Smallest receiver count N >= 2 at which the probabilistic protocol
/// becomes sample efficient for the given dimension and heralding
/// probability. The search walks N upward and stops at `cap`; when p = 1
/// the comparison is carried out in exact integer arithmetic.
struct MinReceiversResult {
  bool found = false;
  int n = 0;
  bool exceeded_search_cap = false;
};
MinReceiversResult min_n_for_se(int d, double p, int cap = 1000000);

// ---------------------------------------------------------------------------
// Measurement statistics
// ---------------------------------------------------------------------------

/// Two sided Hoeffding sample count for mean estimation of a variable with
/// range c to accuracy eps and confidence 1 - delta:
/// ceil(c^2 ln(2/delta) / (2 eps^2)).
long long hoeffding_samples(double c, double eps, double delta);

/// Same bound after quasiprobability sampling inflates the recorded range by
/// the decomposition overhead.
long long virtual_samples(double overhead, double c, double eps, double delta);

/// Sample count for the heralded protocol: the recorded range picks up a
/// factor overhead / p and the final estimate is rescaled by 1 / p, so the
/// bound grows by 1 / p^4 overall relative to the plain Hoeffding count.
long long probabilistic_samples(double overhead, double c, double eps, double delta, double p);

/// Worst case systematic error when one marginal is only known to be within
/// eps1 of its depolarizing target and a traceless observable bounded by
/// o_max is estimated through it: d^2 eps1 o_max / (d^2 - 1).
double statistical_bias_bound(int d, double eps1, double o_max);

}  // namespace vbcast
