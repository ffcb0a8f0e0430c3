#include "vbcast/choi.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

#include <json.hpp>

#include "vbcast/errors.hpp"

namespace vbcast {

ChoiOperator::ChoiOperator(MultipartiteOperator op_in, int input_index_in,
                           std::vector<int> output_indices_in)
    : op(std::move(op_in)),
      input_index(input_index_in),
      output_indices(std::move(output_indices_in)) {
  const int n = op.num_systems();
  if (input_index < 0 || input_index >= n) {
    throw argument_error("ChoiOperator: input_index out of range");
  }
  if (output_indices.empty()) {
    throw argument_error("ChoiOperator: at least one output system is required");
  }
  std::unordered_set<int> seen{input_index};
  for (int idx : output_indices) {
    if (idx < 0 || idx >= n) throw argument_error("ChoiOperator: output index out of range");
    if (!seen.insert(idx).second) {
      throw argument_error("ChoiOperator: input and output indices must be distinct");
    }
  }
  if (static_cast<int>(output_indices.size()) + 1 != n) {
    throw argument_error("ChoiOperator: input and outputs must cover every system of op");
  }
}

std::vector<int> ChoiOperator::output_dims() const {
  std::vector<int> dims;
  dims.reserve(output_indices.size());
  for (int idx : output_indices) dims.push_back(op.dims()[static_cast<size_t>(idx)]);
  return dims;
}

long ChoiOperator::total_output_dim() const {
  long p = 1;
  for (int d : output_dims()) p *= d;
  return p;
}

ChoiOperator depolarizing_choi(int d, double p) {
  if (d < 2) throw argument_error("depolarizing_choi: dimension must be at least 2");
  const double pmax = static_cast<double>(d) * d / (static_cast<double>(d) * d - 1.0);
  if (!(p >= 0.0) || p > pmax + 1e-15) {
    std::ostringstream msg;
    msg << "depolarizing_choi: p must lie in [0, " << pmax << "], got " << p;
    throw argument_error(msg.str());
  }
  const MultipartiteOperator gamma = umes(d);
  const MultipartiteOperator eye = MultipartiteOperator::identity({d, d});
  return ChoiOperator((p / d) * eye + (1.0 - p) * gamma, 0, {1});
}

ChoiOperator identity_choi(int d) { return ChoiOperator(umes(d), 0, {1}); }

MultipartiteOperator input_marginal(const ChoiOperator& choi) {
  return partial_trace(choi.op, choi.output_indices);
}

bool is_completely_positive(const ChoiOperator& choi, double tol) {
  if (choi.op.hermitian_deviation() > config::hermitian_tol()) return false;
  const Eigen::MatrixXcd sym = 0.5 * (choi.op.entries() + choi.op.entries().adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0) >= -tol;
}

bool is_trace_preserving(const ChoiOperator& choi, double tol) {
  const MultipartiteOperator marg = input_marginal(choi);
  const long d = marg.total_dim();
  const Eigen::MatrixXcd defect =
      marg.entries() - Eigen::MatrixXcd::Identity(d, d);
  return defect.cwiseAbs().maxCoeff() <= tol;
}

bool is_trace_nonincreasing(const ChoiOperator& choi, double tol) {
  const MultipartiteOperator marg = input_marginal(choi);
  if (marg.hermitian_deviation() > tol) return false;
  const long d = marg.total_dim();
  const Eigen::MatrixXcd sym =
      0.5 * (marg.entries() + marg.entries().adjoint()) -
      Eigen::MatrixXcd::Identity(d, d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(solver.eigenvalues().size() - 1) <= tol;
}

MultipartiteOperator apply_channel(const ChoiOperator& choi, const MultipartiteOperator& rho) {
  if (rho.num_systems() != 1 ||
      rho.dims()[0] != choi.input_dim()) {
    throw argument_error("apply_channel: rho must be a single system of the input dimension");
  }
  // Contract through the link product with throwaway positional labels.
  std::vector<std::string> tmp;
  tmp.reserve(static_cast<size_t>(choi.op.num_systems()));
  for (int j = 0; j < choi.op.num_systems(); ++j) tmp.push_back("_s" + std::to_string(j));
  const std::string in_label = tmp[static_cast<size_t>(choi.input_index)];
  MultipartiteOperator out =
      link_product(choi.op.with_labels(tmp), rho.with_labels({in_label}), {in_label});
  // Restore the caller's labels on the surviving output systems, which keep
  // their relative order inside op.
  std::vector<std::string> out_labels;
  if (choi.op.has_labels()) {
    for (int j = 0; j < choi.op.num_systems(); ++j) {
      if (j != choi.input_index) out_labels.push_back(choi.op.labels()[static_cast<size_t>(j)]);
    }
  }
  return out.with_labels(std::move(out_labels));
}

namespace {

// Overlap fidelity Tr[J Gamma] / d^2 for a two system Choi operator with
// equal input and output dimensions. Gamma is symmetric under exchanging the
// two systems, so the system order inside op does not matter.
double two_party_fidelity(const MultipartiteOperator& j_op, int d) {
  const MultipartiteOperator gamma = umes(d);
  const std::complex<double> overlap = (j_op.entries() * gamma.entries()).trace();
  return overlap.real() / (static_cast<double>(d) * d);
}

}  // namespace

double channel_fidelity(const ChoiOperator& choi) {
  if (choi.output_indices.size() != 1) {
    throw argument_error("channel_fidelity: the map must have exactly one output system");
  }
  const int d = choi.input_dim();
  if (choi.output_dims()[0] != d) {
    throw argument_error("channel_fidelity: input and output dimensions must match");
  }
  return two_party_fidelity(choi.op, d);
}

ChoiOperator marginal_choi(const ChoiOperator& choi, int receiver) {
  if (receiver < 0 || receiver >= static_cast<int>(choi.output_indices.size())) {
    throw argument_error("marginal_choi: receiver index out of range");
  }
  const int keep_out = choi.output_indices[static_cast<size_t>(receiver)];
  std::vector<int> traced;
  for (int idx : choi.output_indices) {
    if (idx != keep_out) traced.push_back(idx);
  }
  const MultipartiteOperator marg = partial_trace(choi.op, traced);
  // Remaining systems are the input and the kept receiver in op order.
  const int new_input = choi.input_index < keep_out ? 0 : 1;
  const int new_output = 1 - new_input;
  return ChoiOperator(marg, new_input, {new_output});
}

double broadcast_fidelity(const ChoiOperator& choi, int receiver) {
  const ChoiOperator marg = marginal_choi(choi, receiver);
  const int d = marg.input_dim();
  if (marg.output_dims()[0] != d) {
    throw argument_error("broadcast_fidelity: receiver dimension must match the input");
  }
  return two_party_fidelity(marg.op, d);
}

double average_broadcast_fidelity(const ChoiOperator& choi) {
  double acc = 0.0;
  const int n = static_cast<int>(choi.output_indices.size());
  for (int r = 0; r < n; ++r) acc += broadcast_fidelity(choi, r);
  return acc / n;
}

std::string to_json_string(const ChoiOperator& choi, int indent) {
  nlohmann::json j;
  j["op"] = nlohmann::json::parse(to_json_string(choi.op));
  j["input_index"] = choi.input_index;
  j["output_indices"] = choi.output_indices;
  return j.dump(indent);
}

ChoiOperator choi_from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw argument_error(std::string("choi JSON parse failure: ") + e.what());
  }
  if (!j.is_object() || !j.contains("op") || !j.contains("input_index") ||
      !j.contains("output_indices")) {
    throw argument_error("choi JSON must contain op, input_index, and output_indices");
  }
  MultipartiteOperator op = operator_from_json_string(j.at("op").dump());
  int input_index;
  std::vector<int> output_indices;
  try {
    input_index = j.at("input_index").get<int>();
    output_indices = j.at("output_indices").get<std::vector<int>>();
  } catch (const nlohmann::json::exception&) {
    throw argument_error("choi JSON: input_index and output_indices must be integers");
  }
  return ChoiOperator(std::move(op), input_index, std::move(output_indices));
}

}  // namespace vbcast
