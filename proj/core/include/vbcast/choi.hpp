#pragma once

#include <string>
#include <vector>

#include "vbcast/config.hpp"
#include "vbcast/operators.hpp"

namespace vbcast {

/// Choi operator of a linear map from one input system to one or more output
/// systems, stored together with the positions of those systems inside op.
///
/// The convention is J = sum_{i i'} |i><i'| (x) E(|i><i'|) on the input
/// system, so acting on a state rho gives E(rho) = Tr_in[J (rho^T (x) 1)].
/// Trace preserving maps have identity input marginal, subnormalised maps
/// (channels composed with a success filter) have marginal at most identity.
struct ChoiOperator {
  /// Validates that input_index and output_indices partition the systems of
  /// op. output_indices must be nonempty and duplicate free.
  ChoiOperator(MultipartiteOperator op, int input_index, std::vector<int> output_indices);

  MultipartiteOperator op;
  int input_index;
  std::vector<int> output_indices;

  int input_dim() const { return op.dims()[static_cast<size_t>(input_index)]; }
  std::vector<int> output_dims() const;
  long total_output_dim() const;
};

/// Choi operator of the depolarizing channel D_p(rho) = (1 - p) rho + p 1/d.
/// p may exceed 1 up to d^2 / (d^2 - 1), the point where complete positivity
/// is lost; values beyond that range are rejected.
ChoiOperator depolarizing_choi(int d, double p);

/// Identity channel on a d dimensional system.
ChoiOperator identity_choi(int d);

/// Input marginal Tr_outputs[J] as an operator on the input system.
MultipartiteOperator input_marginal(const ChoiOperator& choi);

/// True when the smallest eigenvalue of J is at least -tol.
bool is_completely_positive(const ChoiOperator& choi, double tol = config::psd_tol());

/// True when Tr_outputs[J] equals the identity entrywise within tol.
bool is_trace_preserving(const ChoiOperator& choi, double tol = config::psd_tol());

/// True when Tr_outputs[J] <= 1 as an operator, within tol.
bool is_trace_nonincreasing(const ChoiOperator& choi, double tol = config::psd_tol());

/// Apply the map to a state on the input system. rho must be a single system
/// operator of matching dimension. The result lives on the output systems in
/// their order within op.
MultipartiteOperator apply_channel(const ChoiOperator& choi, const MultipartiteOperator& rho);

/// Entanglement fidelity of a single output map with equal input and output
/// dimensions: the overlap of (id (x) E) applied to the canonical maximally
/// entangled state with that same state.
double channel_fidelity(const ChoiOperator& choi);

/// Marginal map seen by one receiver: trace out every other output.
/// receiver indexes into output_indices.
ChoiOperator marginal_choi(const ChoiOperator& choi, int receiver);

/// Channel fidelity of the marginal map seen by one receiver.
double broadcast_fidelity(const ChoiOperator& choi, int receiver);

/// Mean of broadcast_fidelity over all receivers.
double average_broadcast_fidelity(const ChoiOperator& choi);

/// Serialisation: {"op": <operator>, "input_index": k, "output_indices": [..]}.
std::string to_json_string(const ChoiOperator& choi, int indent = -1);
ChoiOperator choi_from_json_string(const std::string& text);

}  // namespace vbcast
