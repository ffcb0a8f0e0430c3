#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vbcast/choi.hpp"
#include "vbcast/operators.hpp"
#include "vbcast/rng.hpp"

namespace vbcast {

/// Quasi-probability decomposition of a virtual operation into a weighted
/// difference of two completely positive maps.
///
/// The stored Choi operators carry their weights: choi1 is a times the Choi
/// operator of the first channel, so its input marginal is a * identity (or
/// at most that for subnormalised maps), and likewise choi2 with b. The
/// virtual operation itself is the difference map of choi1 - choi2, which is
/// trace preserving exactly when a - b = 1 and both marginals are tight.
///
/// The constructor checks the structural facts only: a, b >= 0 with a + b
/// positive, equal input dimensions and equal output dimension lists.
/// Complete positivity and marginal conditions are verified by the
/// estimation routines, which need them at specific tolerances.
struct VirtualDecomposition {
  VirtualDecomposition(double a, double b, ChoiOperator choi1, ChoiOperator choi2);

  double a;
  double b;
  ChoiOperator choi1;
  ChoiOperator choi2;

  /// Sampling overhead a + b. The estimator variance grows with its square.
  double overhead() const { return a + b; }

  /// a - b. Equals 1 for trace preserving virtual operations and is at most
  /// 1 for trace nonincreasing ones.
  double tp_defect() const { return a - b; }
};

/// Trivial decomposition of the identity channel: a = 1, b = 0.
VirtualDecomposition identity_decomposition(int d);

/// Weighted difference of two depolarizing channels, a D_p1 - b D_p2. When
/// a - b = 1 the difference is itself a depolarizing channel with parameter
/// a p1 - b p2, which makes exact expectation values easy to write down.
VirtualDecomposition depolarizing_pair(int d, double a, double b, double p1, double p2);

/// Reads the two diagonal channel blocks out of a broadcast program witness
/// (the matrix returned by sdp_barrier_solve on a builder program with local
/// dimension d and n receivers) and packages them as a decomposition from
/// the channel input to the n receiver outputs.
///
/// Solver output is only feasible up to its tolerance, so eigenvalues of the
/// blocks above -tolerance are clipped to the positive cone; anything more
/// negative throws argument_error. The weights are recovered from the block
/// traces as a = Tr[J1] / d and b = Tr[J2] / d and must agree with the
/// witness scalar slots within tolerance, and a - b must not exceed 1 by
/// more than tolerance, otherwise invariant_violation is thrown.
VirtualDecomposition decomposition_from_witness(const Eigen::MatrixXcd& witness, int d, int n,
                                                double tolerance = 1e-5);

/// One Monte Carlo estimation job: which virtual operation to sample, on
/// which input state, measuring which observable, and how hard to try.
///
/// rho must be a single system density operator matching the decomposition
/// input dimension; observable must be Hermitian on the full output space.
/// eps and delta parametrise the accuracy test applied to each repetition.
struct ExperimentConfig {
  VirtualDecomposition decomposition;
  MultipartiteOperator rho;
  MultipartiteOperator observable;
  long long shots = 1000;
  int repetitions = 1;
  std::uint64_t seed = 0;
  double eps = 0.1;
  double delta = 0.05;
};

/// Outcome of an estimation job. estimates holds one empirical mean per
/// repetition; truth is the exact expectation the estimator targets. A
/// repetition fails when its mean misses truth by at least eps, and the
/// report passes when the failure rate stays below delta plus the binomial
/// slack 3 sqrt(delta (1 - delta) / repetitions).
///
/// c_effective is the worst case spread of a single recorded sample:
/// (a + b) times the observable spectral range, further divided by the
/// success probability for probabilistic runs. success_rate is the fraction
/// of shots that produced an outcome (1 for deterministic sampling), and
/// variance is the empirical per shot variance of the rescaled samples.
struct ExperimentReport {
  std::vector<double> estimates;
  double truth = 0.0;
  int failure_count = 0;
  double failure_rate = 0.0;
  bool pass = false;
  double c_effective = 0.0;
  double success_rate = 1.0;
  double mean = 0.0;
  double variance = 0.0;
  long long shots = 0;
  int repetitions = 0;
  std::uint64_t seed = 0;
};

/// Monte Carlo estimate of Tr[(a E1 - b E2)(rho) O].
///
/// Each shot picks channel 1 with probability a / (a + b) and channel 2
/// otherwise, applies the picked channel exactly through its Choi operator,
/// samples an eigenvalue of the observable from the resulting output
/// distribution, and records the eigenvalue scaled by a + b and signed by
/// the branch. Repetitions use independent derived streams (seed split by
/// repetition index), so the report does not depend on scheduling and the
/// repetitions could run concurrently.
///
/// Throws argument_error for malformed configs or non completely positive
/// Choi operators, and invariant_violation when an input marginal deviates
/// from its weight times the identity, which would silently bias the
/// estimate.
ExperimentReport simulate_estimate(const ExperimentConfig& config);

/// Result of an accuracy trial: the shot count it ran at, the observed rate
/// of repetitions missing the truth by eps or more, and whether that rate
/// stayed within delta plus binomial slack.
struct EpsilonDeltaResult {
  long long hoeffding_n_used = 0;
  double empirical_failure_rate = 0.0;
  bool pass = false;
};

/// Runs simulate_estimate at the configured shot count and summarises the
/// failure statistics. Callers normally set config.shots to
/// virtual_samples(a + b, c, eps, delta) so the trial probes exactly the
/// sample size that is supposed to guarantee the eps-delta bound.
///
/// The observable must be traceless (the accuracy analysis normalises it
/// that way, and silently shifting would change the spectral range), else
/// argument_error.
EpsilonDeltaResult epsilon_delta_trial(const ExperimentConfig& config);

/// Monte Carlo estimate for subnormalised decompositions that succeed only
/// with probability p. Shots proceed as in simulate_estimate, except each
/// branch first passes a success draw with the branch's own probability
/// (the output trace of the picked map on rho); failed shots record 0 and
/// every recorded value carries an extra factor 1 / p.
///
/// The routine checks that the supplied Chois describe a virtual operation
/// whose marginal on every receiver equals p times the identity channel,
/// the structure that makes the success probability independent of the
/// input state and shared across receivers; a mismatch throws
/// invariant_violation. p outside (0, 1] throws argument_error. With p = 1
/// and trace preserving branches the routine reproduces simulate_estimate
/// shot for shot.
ExperimentReport probabilistic_estimate(const ExperimentConfig& config, double p);

/// Monte Carlo estimate of the broadcast fidelity seen by one receiver of a
/// virtual broadcast map: prepare a maximally entangled pair, send one half
/// through the map, keep the receiver's output, and test against the same
/// maximally entangled state. Each shot is a Bernoulli draw with the exact
/// per branch fidelity as bias, scaled by a + b and signed by the branch.
///
/// The decomposition must have at least two outputs; receiver indexes them.
double estimate_broadcast_fidelity(const VirtualDecomposition& decomposition, int receiver,
                                   long long shots, Rng& rng);

/// Serialisation. Decompositions nest the two Choi operators; configs nest
/// the decomposition and both operators, with shots, repetitions, seed, eps
/// and delta optional on input (defaulting as in ExperimentConfig). Reports
/// are emitted only.
std::string to_json_string(const VirtualDecomposition& decomposition, int indent = -1);
VirtualDecomposition decomposition_from_json_string(const std::string& text);
std::string to_json_string(const ExperimentConfig& config, int indent = -1);
ExperimentConfig config_from_json_string(const std::string& text);
std::string to_json_string(const ExperimentReport& report, int indent = -1);

}  // namespace vbcast
