#include "vbcast/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vbcast/errors.hpp"
#include "vbcast/optimizer.hpp"

namespace vbcast {
namespace {

// Tolerance on the marginal identities that unbiasedness depends on. Solver
// witnesses are feasible only up to their own tolerance, so this sits well
// above it while still catching genuinely broken decompositions.
constexpr double kMarginalTol = 1e-4;

// One half of a decomposition prepared for shot sampling: the branch is
// selected with probability weight / (a + b), succeeds with probability
// success, and on success emits eigenvalue index j with the probability
// encoded in the cdf.
struct Branch {
  double weight = 0.0;
  double sign = 1.0;
  double success = 0.0;
  std::vector<double> cdf;
};

Branch make_branch(const Eigen::MatrixXcd& output, const Eigen::MatrixXcd& vectors,
                   double weight, double sign, double scale) {
  Branch branch;
  branch.weight = weight;
  branch.sign = sign;
  if (weight <= 0.0) return branch;

  const double tr = output.trace().real();
  double success = tr / weight;
  if (success > 1.0 + kMarginalTol * scale) {
    throw invariant_violation("branch success probability exceeds one");
  }
  branch.success = std::clamp(success, 0.0, 1.0);
  if (branch.success == 0.0) return branch;

  // Outcome distribution of the observable in the (normalised) branch
  // output. Rounding can push entries slightly negative; clip and rescale.
  Eigen::VectorXd probs = (vectors.adjoint() * output * vectors).diagonal().real();
  probs = probs.cwiseMax(0.0);
  const double total = probs.sum();
  if (total <= 0.0) {
    throw numeric_error("branch output distribution is degenerate");
  }
  branch.cdf.resize(static_cast<size_t>(probs.size()));
  double acc = 0.0;
  for (long j = 0; j < probs.size(); ++j) {
    acc += probs(j) / total;
    branch.cdf[static_cast<size_t>(j)] = acc;
  }
  branch.cdf.back() = 1.0;
  return branch;
}

long sample_outcome(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const long idx = it - cdf.begin();
  return std::min<long>(idx, static_cast<long>(cdf.size()) - 1);
}

void validate_config(const ExperimentConfig& config) {
  if (config.shots < 1) throw argument_error("shots must be at least 1");
  if (config.repetitions < 1) throw argument_error("repetitions must be at least 1");
  if (!(config.eps > 0.0)) throw argument_error("eps must be positive");
  if (!(config.delta > 0.0) || !(config.delta < 1.0)) {
    throw argument_error("delta must lie strictly between 0 and 1");
  }
  const VirtualDecomposition& dec = config.decomposition;
  if (config.rho.num_systems() != 1 || config.rho.total_dim() != dec.choi1.input_dim()) {
    throw argument_error("rho must be a single system of the decomposition input dimension");
  }
  if (!config.rho.is_hermitian() ||
      std::abs(trace(config.rho).real() - 1.0) > 1e-9 ||
      std::abs(trace(config.rho).imag()) > 1e-9 ||
      !is_positive_semidefinite(config.rho)) {
    throw argument_error("rho must be a density operator");
  }
  if (!config.observable.is_hermitian()) {
    throw argument_error("observable must be Hermitian");
  }
  if (config.observable.total_dim() != dec.choi1.total_output_dim()) {
    throw argument_error("observable dimension must match the decomposition output space");
  }
  if (!is_completely_positive(dec.choi1) || !is_completely_positive(dec.choi2)) {
    throw argument_error("decomposition halves must be completely positive");
  }
}

double marginal_deviation(const ChoiOperator& choi, double weight) {
  const Eigen::MatrixXcd marginal = input_marginal(choi).entries();
  const long d = marginal.rows();
  return (marginal - weight * Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff();
}

// Shared engine behind the deterministic and probabilistic estimators.
// success_scale < 0 selects the deterministic mode (every shot succeeds and
// no rescaling happens); otherwise it is the success probability p.
ExperimentReport run_estimation(const ExperimentConfig& config, double success_scale) {
  validate_config(config);
  const VirtualDecomposition& dec = config.decomposition;
  const bool probabilistic = success_scale >= 0.0;
  const double p_div = probabilistic ? success_scale : 1.0;
  const double magnitude = dec.overhead();

  if (probabilistic) {
    // The supplied maps must implement p times the identity on every
    // receiver. That structure is what makes the success probability a
    // property of the protocol rather than of the input state, and it is
    // shared across receivers; without it failure relabelling biases the
    // estimate.
    const int d = dec.choi1.input_dim();
    const Eigen::MatrixXcd target = success_scale * umes(d).entries();
    const ChoiOperator diff(dec.choi1.op - dec.choi2.op, dec.choi1.input_index,
                            dec.choi1.output_indices);
    for (size_t r = 0; r < dec.choi1.output_indices.size(); ++r) {
      const Eigen::MatrixXcd marginal = marginal_choi(diff, static_cast<int>(r)).op.entries();
      if ((marginal - target).cwiseAbs().maxCoeff() > kMarginalTol * (1.0 + magnitude)) {
        throw invariant_violation(
            "receiver marginal does not match the declared success probability");
      }
    }
  } else {
    if (marginal_deviation(dec.choi1, dec.a) > kMarginalTol * (1.0 + magnitude) ||
        marginal_deviation(dec.choi2, dec.b) > kMarginalTol * (1.0 + magnitude)) {
      throw invariant_violation("input marginals must equal the decomposition weights");
    }
  }

  const Eigen::MatrixXcd obs =
      0.5 * (config.observable.entries() + config.observable.entries().adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eigen(obs);
  if (eigen.info() != Eigen::Success) {
    throw numeric_error("observable eigendecomposition failed");
  }
  const Eigen::VectorXd outcomes = eigen.eigenvalues();
  const Eigen::MatrixXcd vectors = eigen.eigenvectors();
  const double spread = outcomes(outcomes.size() - 1) - outcomes(0);

  const Eigen::MatrixXcd out1 = apply_channel(dec.choi1, config.rho).entries();
  const Eigen::MatrixXcd out2 = apply_channel(dec.choi2, config.rho).entries();
  const Branch branch1 = make_branch(out1, vectors, dec.a, 1.0, 1.0 + magnitude);
  const Branch branch2 = make_branch(out2, vectors, dec.b, -1.0, 1.0 + magnitude);
  const double pick1 = dec.a / magnitude;

  ExperimentReport report;
  report.truth = ((out1 - out2) * obs).trace().real() / p_div;
  report.c_effective = magnitude * spread / p_div;
  report.shots = config.shots;
  report.repetitions = config.repetitions;
  report.seed = config.seed;
  report.estimates.reserve(static_cast<size_t>(config.repetitions));

  long long successes = 0;
  double grand_sum = 0.0;
  double grand_sumsq = 0.0;
  const Rng root(config.seed);
  for (int rep = 0; rep < config.repetitions; ++rep) {
    Rng stream = root.split(static_cast<std::uint64_t>(rep));
    double rep_sum = 0.0;
    for (long long shot = 0; shot < config.shots; ++shot) {
      const Branch& branch = stream.uniform() < pick1 ? branch1 : branch2;
      double value = 0.0;
      bool succeeded = true;
      if (probabilistic && branch.success < 1.0 - 1e-12) {
        succeeded = stream.uniform() < branch.success;
      }
      if (succeeded) {
        const long j = sample_outcome(branch.cdf, stream.uniform());
        value = branch.sign * magnitude * outcomes(j) / p_div;
        ++successes;
      }
      rep_sum += value;
      grand_sum += value;
      grand_sumsq += value * value;
    }
    const double estimate = rep_sum / static_cast<double>(config.shots);
    report.estimates.push_back(estimate);
    if (std::abs(estimate - report.truth) >= config.eps) ++report.failure_count;
  }

  const double total = static_cast<double>(config.shots) * config.repetitions;
  report.failure_rate = report.failure_count / static_cast<double>(config.repetitions);
  const double slack =
      3.0 * std::sqrt(config.delta * (1.0 - config.delta) / config.repetitions);
  report.pass = report.failure_rate <= config.delta + slack;
  report.success_rate = successes / total;
  report.mean = grand_sum / total;
  report.variance = std::max(0.0, grand_sumsq / total - report.mean * report.mean);
  return report;
}

nlohmann::json operator_json(const MultipartiteOperator& op) {
  return nlohmann::json::parse(to_json_string(op));
}

}  // namespace

VirtualDecomposition::VirtualDecomposition(double a_in, double b_in, ChoiOperator choi1_in,
                                           ChoiOperator choi2_in)
    : a(a_in), b(b_in), choi1(std::move(choi1_in)), choi2(std::move(choi2_in)) {
  if (!(a >= 0.0) || !(b >= 0.0)) {
    throw argument_error("decomposition weights must be nonnegative");
  }
  if (!(a + b > 0.0)) {
    throw argument_error("decomposition must have positive total weight");
  }
  if (choi1.input_dim() != choi2.input_dim() ||
      choi1.output_dims() != choi2.output_dims()) {
    throw size_error("decomposition halves must share input and output dimensions");
  }
}

VirtualDecomposition identity_decomposition(int d) {
  ChoiOperator one = identity_choi(d);
  ChoiOperator zero(MultipartiteOperator::zero({d, d}), 0, {1});
  return VirtualDecomposition(1.0, 0.0, std::move(one), std::move(zero));
}

VirtualDecomposition depolarizing_pair(int d, double a, double b, double p1, double p2) {
  ChoiOperator base1 = depolarizing_choi(d, p1);
  ChoiOperator base2 = depolarizing_choi(d, p2);
  ChoiOperator scaled1(a * base1.op, 0, {1});
  ChoiOperator scaled2(b * base2.op, 0, {1});
  return VirtualDecomposition(a, b, std::move(scaled1), std::move(scaled2));
}

VirtualDecomposition decomposition_from_witness(const Eigen::MatrixXcd& witness, int d, int n,
                                                double tolerance) {
  if (!(tolerance > 0.0)) throw argument_error("tolerance must be positive");
  const WitnessChannels channels = extract_witness_channels(witness, d, n);

  const auto clip_psd = [&](const Eigen::MatrixXcd& block) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eigen(block);
    if (eigen.info() != Eigen::Success) {
      throw numeric_error("witness block eigendecomposition failed");
    }
    const Eigen::VectorXd values = eigen.eigenvalues();
    const double scale = 1.0 + values.cwiseAbs().maxCoeff();
    if (values(0) < -tolerance * scale) {
      throw argument_error("witness block is not completely positive within tolerance");
    }
    return Eigen::MatrixXcd(eigen.eigenvectors() *
                            values.cwiseMax(0.0).asDiagonal() *
                            eigen.eigenvectors().adjoint());
  };

  const Eigen::MatrixXcd j1 = clip_psd(channels.j1.entries());
  const Eigen::MatrixXcd j2 = clip_psd(channels.j2.entries());
  const double a = j1.trace().real() / d;
  const double b = j2.trace().real() / d;
  if (std::abs(a - channels.a) > tolerance * (1.0 + std::abs(a)) ||
      std::abs(b - channels.b) > tolerance * (1.0 + std::abs(b))) {
    throw invariant_violation("witness scalar slots disagree with the block traces");
  }
  if (a - b > 1.0 + tolerance) {
    throw invariant_violation("witness weights exceed the trace preserving budget");
  }

  const std::vector<int> dims(static_cast<size_t>(n) + 1, d);
  std::vector<int> outputs(static_cast<size_t>(n));
  for (int r = 0; r < n; ++r) outputs[static_cast<size_t>(r)] = r + 1;
  ChoiOperator choi1(MultipartiteOperator(j1, dims), 0, outputs);
  ChoiOperator choi2(MultipartiteOperator(j2, dims), 0, std::move(outputs));
  return VirtualDecomposition(a, b, std::move(choi1), std::move(choi2));
}

ExperimentReport simulate_estimate(const ExperimentConfig& config) {
  return run_estimation(config, -1.0);
}

EpsilonDeltaResult epsilon_delta_trial(const ExperimentConfig& config) {
  if (std::abs(trace(config.observable)) > 1e-9) {
    throw argument_error("the accuracy trial requires a traceless observable");
  }
  const ExperimentReport report = simulate_estimate(config);
  EpsilonDeltaResult result;
  result.hoeffding_n_used = config.shots;
  result.empirical_failure_rate = report.failure_rate;
  result.pass = report.pass;
  return result;
}

ExperimentReport probabilistic_estimate(const ExperimentConfig& config, double p) {
  if (!(p > 0.0) || p > 1.0) {
    throw argument_error("success probability must lie in (0, 1]");
  }
  return run_estimation(config, p);
}

double estimate_broadcast_fidelity(const VirtualDecomposition& decomposition, int receiver,
                                   long long shots, Rng& rng) {
  const int outputs = static_cast<int>(decomposition.choi1.output_indices.size());
  if (outputs < 2) throw argument_error("broadcast fidelity needs at least two outputs");
  if (receiver < 0 || receiver >= outputs) throw argument_error("receiver out of range");
  if (shots < 1) throw argument_error("shots must be at least 1");
  if (!is_completely_positive(decomposition.choi1) ||
      !is_completely_positive(decomposition.choi2)) {
    throw argument_error("decomposition halves must be completely positive");
  }

  // Per branch, the overlap test against the maximally entangled state is a
  // Bernoulli draw whose bias is the branch's own marginal fidelity.
  const auto bias = [&](const ChoiOperator& choi, double weight) {
    if (weight <= 0.0) return 0.0;
    const double q = broadcast_fidelity(choi, receiver) / weight;
    if (q < -kMarginalTol || q > 1.0 + kMarginalTol) {
      throw invariant_violation("branch marginal fidelity is not a probability");
    }
    return std::clamp(q, 0.0, 1.0);
  };
  const double q1 = bias(decomposition.choi1, decomposition.a);
  const double q2 = bias(decomposition.choi2, decomposition.b);

  const double magnitude = decomposition.overhead();
  const double pick1 = decomposition.a / magnitude;
  double sum = 0.0;
  for (long long shot = 0; shot < shots; ++shot) {
    const bool first = rng.uniform() < pick1;
    const double q = first ? q1 : q2;
    const double hit = rng.uniform() < q ? 1.0 : 0.0;
    sum += (first ? 1.0 : -1.0) * magnitude * hit;
  }
  return sum / static_cast<double>(shots);
}

std::string to_json_string(const VirtualDecomposition& decomposition, int indent) {
  nlohmann::json j;
  j["a"] = decomposition.a;
  j["b"] = decomposition.b;
  j["choi1"] = nlohmann::json::parse(to_json_string(decomposition.choi1));
  j["choi2"] = nlohmann::json::parse(to_json_string(decomposition.choi2));
  return j.dump(indent);
}

VirtualDecomposition decomposition_from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw argument_error(std::string("decomposition JSON parse failure: ") + e.what());
  }
  if (!j.is_object() || !j.contains("a") || !j.contains("b") || !j.contains("choi1") ||
      !j.contains("choi2")) {
    throw argument_error("decomposition JSON must contain a, b, choi1, and choi2");
  }
  double a = 0.0;
  double b = 0.0;
  try {
    a = j.at("a").get<double>();
    b = j.at("b").get<double>();
  } catch (const nlohmann::json::exception&) {
    throw argument_error("decomposition JSON: a and b must be numbers");
  }
  ChoiOperator choi1 = choi_from_json_string(j.at("choi1").dump());
  ChoiOperator choi2 = choi_from_json_string(j.at("choi2").dump());
  return VirtualDecomposition(a, b, std::move(choi1), std::move(choi2));
}

std::string to_json_string(const ExperimentConfig& config, int indent) {
  nlohmann::json j;
  j["decomposition"] = nlohmann::json::parse(to_json_string(config.decomposition));
  j["rho"] = operator_json(config.rho);
  j["observable"] = operator_json(config.observable);
  j["shots"] = config.shots;
  j["repetitions"] = config.repetitions;
  j["seed"] = config.seed;
  j["eps"] = config.eps;
  j["delta"] = config.delta;
  return j.dump(indent);
}

ExperimentConfig config_from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw argument_error(std::string("config JSON parse failure: ") + e.what());
  }
  if (!j.is_object() || !j.contains("decomposition") || !j.contains("rho") ||
      !j.contains("observable")) {
    throw argument_error("config JSON must contain decomposition, rho, and observable");
  }
  VirtualDecomposition decomposition =
      decomposition_from_json_string(j.at("decomposition").dump());
  MultipartiteOperator rho = operator_from_json_string(j.at("rho").dump());
  MultipartiteOperator observable = operator_from_json_string(j.at("observable").dump());
  ExperimentConfig config{std::move(decomposition), std::move(rho), std::move(observable)};
  try {
    config.shots = j.value("shots", config.shots);
    config.repetitions = j.value("repetitions", config.repetitions);
    config.seed = j.value("seed", config.seed);
    config.eps = j.value("eps", config.eps);
    config.delta = j.value("delta", config.delta);
  } catch (const nlohmann::json::exception&) {
    throw argument_error("config JSON: scalar fields have the wrong types");
  }
  return config;
}

std::string to_json_string(const ExperimentReport& report, int indent) {
  nlohmann::json j;
  j["estimates"] = report.estimates;
  j["truth"] = report.truth;
  j["failure_count"] = report.failure_count;
  j["failure_rate"] = report.failure_rate;
  j["pass"] = report.pass;
  j["c_effective"] = report.c_effective;
  j["success_rate"] = report.success_rate;
  j["mean"] = report.mean;
  j["variance"] = report.variance;
  j["shots"] = report.shots;
  j["repetitions"] = report.repetitions;
  j["seed"] = report.seed;
  return j.dump(indent);
}

}  // namespace vbcast
