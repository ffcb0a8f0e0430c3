#include "vbcast/analytic.hpp"

#include <cmath>
#include <sstream>

#include "vbcast/errors.hpp"

namespace vbcast {

namespace {

void validate_dim(int d, const char* what) {
  if (d < 2) throw argument_error(std::string(what) + ": dimension must be at least 2");
}

double eps_upper(int d) { return 1.0 - 1.0 / (static_cast<double>(d) * d); }

void validate_eps(int d, double eps, const char* what) {
  if (!(eps >= 0.0) || eps > eps_upper(d) + 1e-15) {
    std::ostringstream msg;
    msg << what << ": eps must lie in [0, " << eps_upper(d) << "], got " << eps;
    throw argument_error(msg.str());
  }
}

void validate_stat_args(double c, double eps, double delta, const char* what) {
  if (!(c > 0.0)) throw argument_error(std::string(what) + ": range c must be positive");
  if (!(eps > 0.0)) throw argument_error(std::string(what) + ": accuracy eps must be positive");
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw argument_error(std::string(what) + ": confidence delta must lie in (0, 1)");
  }
}

long long ceil_to_count(double x, const char* what) {
  if (!std::isfinite(x) || x < 0.0 || x > 9.0e18) {
    throw numeric_error(std::string(what) + ": sample count out of range");
  }
  return static_cast<long long>(std::ceil(x - 1e-12));
}

}  // namespace

AbcProblem::AbcProblem(int d_in, double eps1_in, double eps2_in)
    : d(d_in), eps1(eps1_in), eps2(eps2_in) {
  validate_dim(d, "AbcProblem");
  validate_eps(d, eps1, "AbcProblem");
  validate_eps(d, eps2, "AbcProblem");
}

PbcProblem::PbcProblem(int d_in, int n_in, double p_in) : d(d_in), n(n_in), p(p_in) {
  validate_dim(d, "PbcProblem");
  if (n < 2) throw argument_error("PbcProblem: at least two receivers are required");
  if (!(p > 0.0) || p > 1.0) throw argument_error("PbcProblem: p must lie in (0, 1]");
}

const char* overhead_method_name(OverheadMethod method) {
  switch (method) {
    case OverheadMethod::closed_form:
      return "closed_form";
    case OverheadMethod::theta_search:
      return "theta_search";
    case OverheadMethod::lp_corner:
      return "lp_corner";
    case OverheadMethod::sdp_oracle:
      return "sdp_oracle";
  }
  return "unknown";
}

double u2_closed(const AbcProblem& problem) {
  return std::max(2.0 * f_max_closed(problem) - 1.0, 1.0);
}

double u2_closed_alternate(const AbcProblem& problem) {
  const double d = problem.d;
  const double t1 = 1.0 - problem.eps1;
  const double t2 = 1.0 - problem.eps2;
  const double symmetric = (d * (3.0 - 2.0 * (problem.eps1 + problem.eps2)) - 1.0) / (d + 1.0);
  const double root_gap = std::sqrt(t1) - std::sqrt(t2);
  const double asymmetry = 2.0 * d * root_gap * root_gap / (d * d - 1.0);
  return std::max(symmetric + asymmetry, 1.0);
}

double v2_exact(int d) {
  validate_dim(d, "v2_exact");
  return (3.0 * d - 1.0) / (d + 1.0);
}

double eps_to_p(int d, double eps) {
  validate_dim(d, "eps_to_p");
  validate_eps(d, eps, "eps_to_p");
  const double dd = static_cast<double>(d) * d;
  return dd * eps / (dd - 1.0);
}

double p_to_eps(int d, double p) {
  validate_dim(d, "p_to_eps");
  if (!(p >= 0.0) || p > 1.0) throw argument_error("p_to_eps: p must lie in [0, 1]");
  const double dd = static_cast<double>(d) * d;
  return p * (dd - 1.0) / dd;
}

SocpCoefficients socp_coeffs(const AbcProblem& problem) {
  const double d = problem.d;
  SocpCoefficients out;
  out.k = std::sqrt(d * d - 1.0);
  out.g = d * (2.0 - problem.eps1 - problem.eps2);
  out.h = d * (problem.eps1 - problem.eps2) / out.k;
  return out;
}

double f_theta(const AbcProblem& problem, double theta) {
  const SocpCoefficients c = socp_coeffs(problem);
  return (c.g + c.h * std::sinh(theta)) / (problem.d + std::cosh(theta));
}

double theta_star(const AbcProblem& problem) {
  const SocpCoefficients c = socp_coeffs(problem);
  const double d = problem.d;
  const double t1 = 1.0 - problem.eps1;
  const double t2 = 1.0 - problem.eps2;
  // sqrt(g^2 - k^2 h^2) collapses to 2 d sqrt(t1 t2).
  const double disc = 2.0 * d * std::sqrt(t1 * t2);
  const double denom = c.g - d * c.h;
  if (!(denom > 0.0)) {
    // Unreachable for valid problems: g > d |h| holds across the whole
    // parameter box. Guard against pathological rounding anyway.
    throw numeric_error("theta_star: degenerate dual profile");
  }
  return std::log((c.h + disc) / denom);
}

double f_max_closed(const AbcProblem& problem) {
  const double d = problem.d;
  const double t1 = 1.0 - problem.eps1;
  const double t2 = 1.0 - problem.eps2;
  return (d * d * (t1 + t2) - 2.0 * d * std::sqrt(t1 * t2)) / (d * d - 1.0);
}

Rational s_n_over_p(int d, int n) {
  validate_dim(d, "s_n_over_p");
  if (n < 2) throw argument_error("s_n_over_p: at least two receivers are required");
  const long long lam = static_cast<long long>(n) + d - 1;
  return Rational(2LL * d * n - lam, lam);
}

double s_n_closed(int d, int n, double p) {
  if (!(p > 0.0) || p > 1.0) throw argument_error("s_n_closed: p must lie in (0, 1]");
  return p * s_n_over_p(d, n).to_double();
}

RateSummary se_abc(int d, const std::vector<double>& eps, std::optional<double> v_n,
                   double n_q) {
  validate_dim(d, "se_abc");
  if (eps.size() < 2) throw argument_error("se_abc: at least two receivers are required");
  if (!(n_q > 0.0)) throw argument_error("se_abc: per copy cost must be positive");
  for (double e : eps) validate_eps(d, e, "se_abc");
  const int n = static_cast<int>(eps.size());

  RateSummary out;
  if (v_n.has_value()) {
    if (!(*v_n >= 1.0)) throw argument_error("se_abc: supplied overhead must be at least 1");
    out.overhead = *v_n;
  } else if (n == 2) {
    out.overhead = u2_closed(AbcProblem(d, eps[0], eps[1]));
  } else {
    throw dependency_error(
        "se_abc: overhead values beyond two receivers must be supplied through v_n");
  }

  double eps_sum = 0.0;
  for (double e : eps) eps_sum += e;
  out.rate = (1.0 - eps_sum / n) / (out.overhead * out.overhead * n_q);
  out.naive_rate = 1.0 / (n * n_q);
  out.threshold = std::sqrt(static_cast<double>(n) - eps_sum);
  out.sample_efficient = out.overhead <= out.threshold;
  return out;
}

double rate_abc(int d, const std::vector<double>& eps, std::optional<double> v_n, double n_q) {
  return se_abc(d, eps, v_n, n_q).rate;
}

double rate_naive(int n, double n_q) {
  if (n < 1) throw argument_error("rate_naive: receiver count must be positive");
  if (!(n_q > 0.0)) throw argument_error("rate_naive: per copy cost must be positive");
  return 1.0 / (n * n_q);
}

double n_prob(const PbcProblem& problem, double n_q) {
  if (!(n_q > 0.0)) throw argument_error("n_prob: per copy cost must be positive");
  const double s = s_n_closed(problem.d, problem.n, problem.p);
  const double p2 = problem.p * problem.p;
  return s * s / (p2 * p2) * n_q;
}

Rational n_prob_exact(int d, int n) {
  const Rational k = s_n_over_p(d, n);
  return k * k;
}

bool se_pbc(const PbcProblem& problem, double n_q) {
  return n_prob(problem, n_q) < problem.n * n_q;
}

double se_pbc_dimension_threshold(int n, double p) {
  if (n < 2) throw argument_error("se_pbc_dimension_threshold: at least two receivers");
  if (!(p > 0.0) || p > 1.0) {
    throw argument_error("se_pbc_dimension_threshold: p must lie in (0, 1]");
  }
  const double root = p * std::sqrt(static_cast<double>(n));
  return (n - 1.0) * (root + 1.0) / (2.0 * n - root - 1.0);
}

double two_receiver_no_go_threshold() { return se_pbc_dimension_threshold(2, 1.0); }

MinReceiversResult min_n_for_se(int d, double p, int cap) {
  validate_dim(d, "min_n_for_se");
  if (!(p > 0.0) || p > 1.0) throw argument_error("min_n_for_se: p must lie in (0, 1]");
  if (cap < 2) throw argument_error("min_n_for_se: cap must be at least 2");

  MinReceiversResult out;
  const bool exact = (p == 1.0);
  for (int n = 2; n <= cap; ++n) {
    bool efficient;
    if (exact) {
      // s_N(1)^2 < N in exact integer arithmetic.
      const Rational k = s_n_over_p(d, n);
      const __int128 lhs = static_cast<__int128>(k.num) * k.num;
      const __int128 rhs = static_cast<__int128>(n) * k.den * k.den;
      efficient = lhs < rhs;
    } else {
      const double k = s_n_over_p(d, n).to_double();
      efficient = (k * k) / (p * p) < static_cast<double>(n);
    }
    if (efficient) {
      out.found = true;
      out.n = n;
      return out;
    }
  }
  out.exceeded_search_cap = true;
  return out;
}

long long hoeffding_samples(double c, double eps, double delta) {
  validate_stat_args(c, eps, delta, "hoeffding_samples");
  return ceil_to_count(c * c * std::log(2.0 / delta) / (2.0 * eps * eps),
                       "hoeffding_samples");
}

long long virtual_samples(double overhead, double c, double eps, double delta) {
  if (!(overhead >= 0.0)) throw argument_error("virtual_samples: overhead must be nonnegative");
  validate_stat_args(c, eps, delta, "virtual_samples");
  const double scaled = overhead * c;
  return ceil_to_count(scaled * scaled * std::log(2.0 / delta) / (2.0 * eps * eps),
                       "virtual_samples");
}

long long probabilistic_samples(double overhead, double c, double eps, double delta, double p) {
  if (!(overhead >= 0.0)) {
    throw argument_error("probabilistic_samples: overhead must be nonnegative");
  }
  if (!(p > 0.0) || p > 1.0) throw argument_error("probabilistic_samples: p must lie in (0, 1]");
  validate_stat_args(c, eps, delta, "probabilistic_samples");
  const double scaled = overhead * c;
  const double p2 = p * p;
  return ceil_to_count(scaled * scaled * std::log(2.0 / delta) / (2.0 * eps * eps * p2 * p2),
                       "probabilistic_samples");
}

double statistical_bias_bound(int d, double eps1, double o_max) {
  validate_dim(d, "statistical_bias_bound");
  if (!(eps1 >= 0.0)) throw argument_error("statistical_bias_bound: eps must be nonnegative");
  if (!(o_max >= 0.0)) {
    throw argument_error("statistical_bias_bound: observable bound must be nonnegative");
  }
  const double dd = static_cast<double>(d) * d;
  return dd * eps1 * o_max / (dd - 1.0);
}

}  // namespace vbcast
