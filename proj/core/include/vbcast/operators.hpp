#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vbcast/config.hpp"

namespace vbcast {

/// A linear operator on a tensor product of finite dimensional systems.
///
/// The matrix is stored in the computational basis with system 0 as the most
/// significant tensor factor, so for dims {d0, d1} the row index is
/// i0 * d1 + i1. Instances are immutable: all algebra below returns new
/// values and never mutates an operand.
///
/// Systems may optionally carry string labels. Labels are only required by
/// operations that contract named systems (link_product); everything else
/// works positionally.
class MultipartiteOperator {
 public:
  /// Wraps a dense matrix. The matrix must be square with side equal to the
  /// product of dims, and that product must not exceed config::max_dim().
  /// Labels are either empty or one unique label per system.
  MultipartiteOperator(Eigen::MatrixXcd entries, std::vector<int> dims,
                       std::vector<std::string> labels = {});

  static MultipartiteOperator zero(const std::vector<int>& dims,
                                   std::vector<std::string> labels = {});
  static MultipartiteOperator identity(const std::vector<int>& dims,
                                       std::vector<std::string> labels = {});

  const Eigen::MatrixXcd& entries() const { return entries_; }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<std::string>& labels() const { return labels_; }

  int num_systems() const { return static_cast<int>(dims_.size()); }
  long total_dim() const { return entries_.rows(); }
  bool has_labels() const { return !labels_.empty(); }

  /// Position of the system carrying the given label; throws argument_error
  /// if the operator is unlabelled or the label is absent.
  int label_index(const std::string& label) const;

  /// Copy with the labels replaced (empty clears them).
  MultipartiteOperator with_labels(std::vector<std::string> labels) const;

  /// Max absolute entry of X - X^dagger.
  double hermitian_deviation() const;
  bool is_hermitian(double tol = config::hermitian_tol()) const;

 private:
  Eigen::MatrixXcd entries_;
  std::vector<int> dims_;
  std::vector<std::string> labels_;
};

// ---------------------------------------------------------------------------
// Construction helpers
// ---------------------------------------------------------------------------

/// Unnormalised maximally entangled operator sum_{ij} |ii><jj| on two
/// d-dimensional systems. Its trace is d and it equals d times the projector
/// onto the canonical maximally entangled state.
MultipartiteOperator umes(int d);

/// Maximally entangled state umes(d) / d, a rank one density operator.
MultipartiteOperator mes(int d);

// ---------------------------------------------------------------------------
// Algebra. All functions are pure; operands are never modified.
// ---------------------------------------------------------------------------

/// Tensor product; systems of a come first. Labels are kept when both sides
/// are labelled and the union stays unique, otherwise the result is
/// unlabelled.
MultipartiteOperator kron(const MultipartiteOperator& a, const MultipartiteOperator& b);

/// Trace out the listed systems (positions into dims). The remaining systems
/// keep their relative order and labels. Tracing every system leaves a
/// 1 x 1 operator with no systems.
MultipartiteOperator partial_trace(const MultipartiteOperator& op,
                                   const std::vector<int>& systems);

/// Transpose the listed systems in the computational basis.
MultipartiteOperator partial_transpose(const MultipartiteOperator& op,
                                       const std::vector<int>& systems);

/// Permute systems: order[k] is the current position of the system that
/// should end up at position k.
MultipartiteOperator reorder(const MultipartiteOperator& op, const std::vector<int>& order);

/// Embed op into a larger system list, acting as the identity elsewhere.
/// positions[j] is where system j of op lands; full_dims must agree with
/// op.dims() at those positions.
MultipartiteOperator embed(const MultipartiteOperator& op, const std::vector<int>& positions,
                           const std::vector<int>& full_dims,
                           std::vector<std::string> full_labels = {});

/// Link product: contract the systems named in shared, which must carry equal
/// dimensions on both operands. Both operands must be fully labelled and any
/// label common to both operands must be listed in shared. The result keeps
/// m's unshared systems (in order) followed by n's.
///
/// The contraction matches the standard network composition rule for process
/// matrices: composing a channel's Choi operator with a state over the input
/// system yields the channel output, and linking with an identity operator
/// performs a partial trace.
MultipartiteOperator link_product(const MultipartiteOperator& m, const MultipartiteOperator& n,
                                  const std::vector<std::string>& shared);

MultipartiteOperator operator+(const MultipartiteOperator& a, const MultipartiteOperator& b);
MultipartiteOperator operator-(const MultipartiteOperator& a, const MultipartiteOperator& b);
MultipartiteOperator operator*(std::complex<double> scale, const MultipartiteOperator& op);
MultipartiteOperator operator*(double scale, const MultipartiteOperator& op);

std::complex<double> trace(const MultipartiteOperator& op);

/// Eigenvalues of a Hermitian operator in ascending order. The operator must
/// pass the Hermiticity check at the given tolerance; the spectrum is then
/// computed from the symmetrised matrix (X + X^dagger) / 2.
Eigen::VectorXd hermitian_eigenvalues(const MultipartiteOperator& op,
                                      double tol = config::hermitian_tol());

bool is_positive_semidefinite(const MultipartiteOperator& op,
                              double tol = config::psd_tol());

// ---------------------------------------------------------------------------
// Serialisation: {"dims": [...], "re": [[...]], "im": [[...]]} with row major
// matrices. Labels are not serialised; attach them after loading if needed.
// ---------------------------------------------------------------------------

std::string to_json_string(const MultipartiteOperator& op, int indent = -1);
MultipartiteOperator operator_from_json_string(const std::string& text);

}  // namespace vbcast
