#include "vbcast/verification.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <sstream>
#include <utility>

#include <Eigen/Dense>
#include <json.hpp>

#include "vbcast/analytic.hpp"
#include "vbcast/choi.hpp"
#include "vbcast/errors.hpp"
#include "vbcast/operators.hpp"
#include "vbcast/optimizer.hpp"
#include "vbcast/permutations.hpp"
#include "vbcast/rational.hpp"
#include "vbcast/rng.hpp"
#include "vbcast/sampling.hpp"

namespace vbcast {
namespace {

using cd = std::complex<double>;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

CheckResult deviation_check(std::string name, double measured, double tolerance,
                            std::string detail = std::string()) {
  CheckResult out;
  out.name = std::move(name);
  out.measured = measured;
  out.tolerance = tolerance;
  out.passed = std::isfinite(measured) && measured <= tolerance;
  out.detail = std::move(detail);
  return out;
}

double max_abs_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

double eps_upper(int d) { return 1.0 - 1.0 / (double(d) * d); }

Eigen::MatrixXcd kron_matrix(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i) {
    for (long j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// Random channel from one d dimensional system to `outs` copies of it,
// generated from Gaussian Kraus operators normalised with an inverse square
// root so the result is exactly trace preserving.
ChoiOperator random_cptp_choi(int d, int outs, int kraus_count, Rng& rng) {
  long dout = 1;
  for (int i = 0; i < outs; ++i) dout *= d;
  std::vector<Eigen::MatrixXcd> kraus;
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < kraus_count; ++i) {
    Eigen::MatrixXcd k(dout, d);
    for (long r = 0; r < dout; ++r) {
      for (int c = 0; c < d; ++c) k(r, c) = cd(rng.normal(), rng.normal());
    }
    kraus.push_back(k);
    s += k.adjoint() * k;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s);
  const Eigen::MatrixXcd fix = es.operatorInverseSqrt();
  const Eigen::MatrixXcd gamma = umes(d).entries();
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(d, d);
  Eigen::MatrixXcd j = Eigen::MatrixXcd::Zero(d * dout, d * dout);
  for (const auto& k : kraus) {
    const Eigen::MatrixXcd lifted = kron_matrix(eye, k * fix);
    j += lifted * gamma * lifted.adjoint();
  }
  std::vector<int> dims(static_cast<size_t>(outs) + 1, d);
  std::vector<int> outputs;
  for (int i = 1; i <= outs; ++i) outputs.push_back(i);
  return ChoiOperator(MultipartiteOperator(std::move(j), std::move(dims)), 0, outputs);
}

MultipartiteOperator random_hermitian(const std::vector<int>& dims, Rng& rng) {
  long dim = 1;
  for (int d : dims) dim *= d;
  Eigen::MatrixXcd g(dim, dim);
  for (long r = 0; r < dim; ++r) {
    for (long c = 0; c < dim; ++c) g(r, c) = cd(rng.normal(), rng.normal());
  }
  return MultipartiteOperator(Eigen::MatrixXcd(0.5 * (g + g.adjoint())), dims);
}

// ---------------------------------------------------------------------------
// Criterion bodies
// ---------------------------------------------------------------------------

CriterionResult check_noiseless_overhead(std::uint64_t) {
  CriterionResult out;
  out.number = 1;
  out.label = "noiseless two receiver overhead";
  out.budget_seconds = 1.0;
  const auto start = Clock::now();

  double worst = 0.0;
  for (int d = 2; d <= 10; ++d) {
    const double expected = (3.0 * d - 1.0) / (d + 1.0);
    const double got = u2_closed(AbcProblem(d, 0.0, 0.0));
    worst = std::max(worst, std::abs(got - expected));
  }
  out.checks.push_back(deviation_check(
      "noiseless overhead equals (3d - 1)/(d + 1) for d = 2..10", worst, 1e-12));

  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_closed_form_equivalence(std::uint64_t) {
  CriterionResult out;
  out.number = 2;
  out.label = "two receiver overhead expressions agree";
  out.budget_seconds = 5.0;
  const auto start = Clock::now();

  for (int d : {2, 3, 5, 10}) {
    const double upper = eps_upper(d);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 50; ++j) {
        const AbcProblem problem(d, upper * i / 49.0, upper * j / 49.0);
        worst = std::max(worst, std::abs(u2_closed(problem) - u2_closed_alternate(problem)));
      }
    }
    std::ostringstream name;
    name << "factored and direct overhead forms agree on a 50x50 grid at d = " << d;
    out.checks.push_back(deviation_check(name.str(), worst, 1e-12));
  }

  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_theta_search(std::uint64_t seed) {
  CriterionResult out;
  out.number = 3;
  out.label = "golden section search reproduces the closed form";
  out.budget_seconds = 10.0;
  const auto start = Clock::now();

  Rng rng = Rng(seed).split(3);
  const std::array<int, 3> dims = {2, 3, 5};
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const int d = dims[static_cast<size_t>(k % 3)];
    const double upper = eps_upper(d) * 0.999;
    const AbcProblem problem(d, rng.uniform() * upper, rng.uniform() * upper);
    const OverheadResult searched = abc_dual_theta_search(problem);
    worst = std::max(worst, std::abs(searched.value - u2_closed(problem)));
  }
  out.checks.push_back(deviation_check(
      "theta search matches the closed form on 200 random problems", worst, 1e-8));

  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_sdp_oracle(std::uint64_t) {
  CriterionResult out;
  out.number = 4;
  out.label = "barrier solver matches the closed forms";
  out.budget_seconds = 120.0;
  const auto start = Clock::now();

  const auto push_solution = [&out](std::string name, const SdpSolution& solution,
                                    double expected) {
    const double diff = std::abs(solution.value - expected);
    CheckResult check = deviation_check(std::move(name), diff, 1e-5);
    if (solution.status != SdpStatus::optimal) {
      check.passed = false;
      check.detail = std::string("solver status ") + sdp_status_name(solution.status);
    }
    out.checks.push_back(std::move(check));
  };

  const std::array<std::pair<double, double>, 3> abc_eps = {
      {{0.0, 0.0}, {0.1, 0.3}, {0.25, 0.25}}};
  for (const auto& [e1, e2] : abc_eps) {
    const SdpStandardForm form = build_abc_primal_sdp(2, 2, {e1, e2});
    std::ostringstream name;
    name << "barrier overhead at d = 2, eps = (" << e1 << ", " << e2 << ")";
    push_solution(name.str(), sdp_barrier_solve(form), u2_closed(AbcProblem(2, e1, e2)));
  }

  for (int n : {2, 3}) {
    for (double p : {0.5, 1.0}) {
      const SdpStandardForm form = build_pbc_primal_sdp(2, n, p);
      std::ostringstream name;
      name << "barrier heralded overhead at d = 2, N = " << n << ", p = " << p;
      push_solution(name.str(), sdp_barrier_solve(form), s_n_closed(2, n, p));
    }
  }

  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_spectra(std::uint64_t seed) {
  CriterionResult out;
  out.number = 5;
  out.label = "pencil and receiver sum spectra";
  out.budget_seconds = 30.0;
  const auto start = Clock::now();

  Rng rng = Rng(seed).split(5);
  double worst_multiset = 0.0;
  double worst_kernel = 0.0;
  for (int d : {2, 3}) {
    const long dim = long(d) * d * d;
    for (int rep = 0; rep < 50; ++rep) {
      const double x = 2.0 * rng.uniform() - 1.0;
      const double y = 2.0 * rng.uniform() - 1.0;
      const MxySpectrum spectrum = m_xy_spectrum(x, y, d);

      std::vector<double> expected;
      expected.reserve(static_cast<size_t>(dim));
      expected.insert(expected.end(), static_cast<size_t>(spectrum.branch_multiplicity),
                      spectrum.lambda_plus);
      expected.insert(expected.end(), static_cast<size_t>(spectrum.branch_multiplicity),
                      spectrum.lambda_minus);
      expected.insert(expected.end(), static_cast<size_t>(spectrum.zero_multiplicity), 0.0);
      std::sort(expected.begin(), expected.end());

      const Eigen::VectorXd dense = hermitian_eigenvalues(m_xy(x, y, d));
      double multiset = 0.0;
      long kernel = 0;
      for (long i = 0; i < dim; ++i) {
        multiset = std::max(multiset, std::abs(dense[i] - expected[static_cast<size_t>(i)]));
        if (std::abs(dense[i]) < 1e-8) ++kernel;
      }
      worst_multiset = std::max(worst_multiset, multiset);
      const long expected_kernel = long(d) * d * d - 2 * d;
      worst_kernel = std::max(worst_kernel, std::abs(double(kernel - expected_kernel)));
      if (spectrum.zero_multiplicity != expected_kernel) worst_kernel += 1.0;
    }
  }
  out.checks.push_back(deviation_check(
      "pencil spectrum closed form matches the dense solver on 100 draws",
      worst_multiset, 1e-10));
  out.checks.push_back(deviation_check(
      "pencil kernel dimension equals d^3 - 2d", worst_kernel, 0.0));

  double worst_z = 0.0;
  for (int d : {2, 3}) {
    for (int n : {2, 3}) {
      const double expected = double(n) + d - 1;
      const Eigen::VectorXd dense = hermitian_eigenvalues(z_operator(d, n));
      worst_z = std::max(worst_z, std::abs(z_lambda_max(d, n) - expected));
      worst_z = std::max(worst_z, std::abs(dense[dense.size() - 1] - expected));
    }
  }
  out.checks.push_back(deviation_check(
      "receiver sum operator tops out at N + d - 1", worst_z, 1e-10));

  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_no_go_constants(std::uint64_t) {
  CriterionResult out;
  out.number = 6;
  out.label = "heralded broadcast no-go constants";
  const auto start = Clock::now();

  out.checks.push_back(deviation_check(
      "two receiver dimension threshold is about 1.5224",
      std::abs(two_receiver_no_go_threshold() - 1.5224), 1e-4));

  const Rational two_rec = n_prob_exact(2, 2);
  CheckResult pair_check = deviation_check(
      "two receiver qubit measurement cost is exactly 25/9, above the baseline 2",
      two_rec == Rational(25, 9) && two_rec > Rational(2) ? 0.0 : 1.0, 0.0,
      "computed " + two_rec.to_string());
  out.checks.push_back(std::move(pair_check));

  const Rational six_rec = n_prob_exact(2, 6);
  CheckResult six_check = deviation_check(
      "six receiver qubit measurement cost is exactly 289/49, below the baseline 6",
      six_rec == Rational(289, 49) && six_rec < Rational(6) ? 0.0 : 1.0, 0.0,
      "computed " + six_rec.to_string());
  out.checks.push_back(std::move(six_check));

  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_se_thresholds(std::uint64_t) {
  CriterionResult out;
  out.number = 7;
  out.label = "sample efficiency onset thresholds";
  const auto start = Clock::now();

  const std::array<std::pair<int, int>, 3> expected = {{{2, 6}, {3, 20}, {4, 42}}};
  for (const auto& [d, n] : expected) {
    const MinReceiversResult result = min_n_for_se(d, 1.0);
    std::ostringstream name;
    name << "smallest efficient receiver count at d = " << d << " is " << n;
    const double deviation = result.found ? std::abs(double(result.n - n)) : 1.0;
    out.checks.push_back(deviation_check(name.str(), deviation, 0.0));
  }

  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_twirl(std::uint64_t seed) {
  CriterionResult out;
  out.number = 8;
  out.label = "twirl projection properties";
  out.budget_seconds = 60.0;
  const auto start = Clock::now();

  Rng root = Rng(seed).split(8);

  Rng channel_rng = root.split(1);
  double worst_depol = 0.0;
  for (int d : {2, 3}) {
    for (int rep = 0; rep < 10; ++rep) {
      const ChoiOperator choi = random_cptp_choi(d, 1, 3, channel_rng);
      const double p = channel_twirl_parameter(choi);
      const MultipartiteOperator twirled = twirl_exact(choi.op);
      worst_depol = std::max(
          worst_depol, max_abs_diff(twirled.entries(), depolarizing_choi(d, p).op.entries()));
    }
  }
  out.checks.push_back(deviation_check(
      "twirled channels are depolarizing on 20 random channels", worst_depol, 1e-10));

  Rng hermitian_rng = root.split(2);
  double worst_idem = 0.0;
  for (int d : {2, 3}) {
    for (int rep = 0; rep < 3; ++rep) {
      const MultipartiteOperator x = random_hermitian({d, d, d}, hermitian_rng);
      const MultipartiteOperator once = twirl_exact(x);
      worst_idem = std::max(worst_idem, max_abs_diff(twirl_exact(once).entries(), once.entries()));
    }
  }
  out.checks.push_back(deviation_check(
      "exact three system twirl is idempotent", worst_idem, 1e-11));

  Rng data_rng = root.split(3);
  const MultipartiteOperator x = random_hermitian({2, 2, 2}, data_rng);
  const MultipartiteOperator exact = twirl_exact(x);
  const Rng sampler = root.split(4);
  const double err_rough = (twirl_mc(x, 100, sampler).entries() - exact.entries()).norm();
  const double err_fine = (twirl_mc(x, 10000, sampler).entries() - exact.entries()).norm();
  const double ratio = err_rough / err_fine;
  CheckResult mc_check;
  mc_check.name = "monte carlo twirl error follows the square root law";
  mc_check.measured = ratio;
  mc_check.tolerance = 0.0;
  mc_check.passed = std::isfinite(ratio) && ratio >= 10.0 / 3.0 && ratio <= 30.0;
  mc_check.detail =
      "Frobenius error ratio between 100 and 10000 samples, expected in [10/3, 30]";
  out.checks.push_back(std::move(mc_check));

  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_epsilon_delta(std::uint64_t seed) {
  CriterionResult out;
  out.number = 9;
  out.label = "epsilon delta sampling trial";
  out.budget_seconds = 60.0;
  const auto start = Clock::now();

  const long long n = virtual_samples(1.0, 2.0, 0.1, 0.05);
  out.checks.push_back(deviation_check(
      "unit overhead sample bound for a range 2 observable is 738",
      std::abs(double(n - 738)), 0.0));

  Eigen::MatrixXcd plus(2, 2);
  plus << 0.5, 0.5, 0.5, 0.5;
  Eigen::MatrixXcd pauli_z(2, 2);
  pauli_z << 1.0, 0.0, 0.0, -1.0;
  ExperimentConfig config{identity_decomposition(2), MultipartiteOperator(plus, {2}),
                          MultipartiteOperator(pauli_z, {2})};
  config.shots = n;
  config.repetitions = 200;
  config.seed = Rng(seed).split(9).seed();
  config.eps = 0.1;
  config.delta = 0.05;
  const EpsilonDeltaResult trial = epsilon_delta_trial(config);

  const double band = 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / 200.0);
  CheckResult rate_check = deviation_check(
      "empirical failure rate over 200 repetitions stays within the declared band",
      trial.empirical_failure_rate, band);
  rate_check.passed = rate_check.passed && trial.pass && trial.hoeffding_n_used == n;
  out.checks.push_back(std::move(rate_check));

  out.seconds = seconds_since(start);
  return out;
}

CriterionResult check_se_spot_checks(std::uint64_t) {
  CriterionResult out;
  out.number = 10;
  out.label = "sample efficiency region spot checks";
  const auto start = Clock::now();

  const RateSummary noiseless = se_abc(2, {0.0, 0.0});
  out.checks.push_back(deviation_check(
      "noiseless two receiver broadcast is not sample efficient",
      noiseless.sample_efficient ? 1.0 : 0.0, 0.0));

  const RateSummary noisy = se_abc(2, {0.3, 0.3});
  const bool ok = noisy.sample_efficient && noisy.overhead == 1.0;
  out.checks.push_back(deviation_check(
      "eps = 0.3 two receiver broadcast is sample efficient at unit overhead",
      ok ? 0.0 : 1.0, 0.0));

  out.seconds = seconds_since(start);
  return out;
}

using CriterionFn = CriterionResult (*)(std::uint64_t);

struct SuiteLayout {
  const char* name;
  std::vector<CriterionFn> runners;
};

const std::vector<SuiteLayout>& suite_layouts() {
  static const std::vector<SuiteLayout> layouts = {
      {"closed-forms",
       {check_noiseless_overhead, check_closed_form_equivalence, check_no_go_constants,
        check_se_thresholds, check_se_spot_checks}},
      {"spectra", {check_spectra}},
      {"twirl", {check_twirl}},
      {"sdp", {check_theta_search, check_sdp_oracle}},
      {"sampling", {check_epsilon_delta}},
  };
  return layouts;
}

}  // namespace

bool CriterionResult::passed() const {
  for (const auto& check : checks) {
    if (!check.passed) return false;
  }
  if (budget_seconds > 0.0 && seconds > budget_seconds) return false;
  return true;
}

bool SuiteResult::passed() const {
  for (const auto& criterion : criteria) {
    if (!criterion.passed()) return false;
  }
  return true;
}

const std::vector<std::string>& verification_suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& layout : suite_layouts()) out.emplace_back(layout.name);
    return out;
  }();
  return names;
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed) {
  SuiteResult out;
  out.name = name;
  if (name == "all") {
    out.criteria = acceptance_criteria(seed);
    return out;
  }
  for (const auto& layout : suite_layouts()) {
    if (name != layout.name) continue;
    for (CriterionFn runner : layout.runners) out.criteria.push_back(runner(seed));
    return out;
  }
  std::ostringstream msg;
  msg << "run_suite: unknown suite '" << name << "'; expected one of";
  for (const auto& known : verification_suite_names()) msg << " " << known;
  msg << " or all";
  throw argument_error(msg.str());
}

std::vector<CriterionResult> acceptance_criteria(std::uint64_t seed) {
  std::vector<CriterionResult> out;
  for (const auto& layout : suite_layouts()) {
    for (CriterionFn runner : layout.runners) out.push_back(runner(seed));
  }
  std::sort(out.begin(), out.end(),
            [](const CriterionResult& a, const CriterionResult& b) { return a.number < b.number; });
  return out;
}

namespace {

nlohmann::json check_to_json(const CheckResult& check) {
  nlohmann::json j;
  j["name"] = check.name;
  j["passed"] = check.passed;
  j["measured"] = check.measured;
  j["tolerance"] = check.tolerance;
  if (!check.detail.empty()) j["detail"] = check.detail;
  return j;
}

nlohmann::json criterion_to_json(const CriterionResult& criterion) {
  nlohmann::json j;
  j["number"] = criterion.number;
  j["label"] = criterion.label;
  j["passed"] = criterion.passed();
  j["seconds"] = criterion.seconds;
  j["budget_seconds"] = criterion.budget_seconds;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& check : criterion.checks) checks.push_back(check_to_json(check));
  j["checks"] = std::move(checks);
  return j;
}

}  // namespace

std::string to_json_string(const CheckResult& check, int indent) {
  return check_to_json(check).dump(indent);
}

std::string to_json_string(const CriterionResult& criterion, int indent) {
  return criterion_to_json(criterion).dump(indent);
}

std::string to_json_string(const SuiteResult& suite, int indent) {
  nlohmann::json j;
  j["suite"] = suite.name;
  j["passed"] = suite.passed();
  nlohmann::json criteria = nlohmann::json::array();
  for (const auto& criterion : suite.criteria) criteria.push_back(criterion_to_json(criterion));
  j["criteria"] = std::move(criteria);
  return j.dump(indent);
}

}  // namespace vbcast
