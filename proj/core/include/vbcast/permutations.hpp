#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vbcast/choi.hpp"
#include "vbcast/operators.hpp"
#include "vbcast/rng.hpp"

namespace vbcast {

/// Permutation of {0, ..., k-1} stored by images: images()[i] is where i goes.
class Permutation {
 public:
  explicit Permutation(std::vector<int> images);
  static Permutation identity(int k);

  int size() const { return static_cast<int>(images_.size()); }
  int operator()(int i) const { return images_[static_cast<size_t>(i)]; }
  const std::vector<int>& images() const { return images_; }

  /// Composition acting right to left: compose(other)(i) = this(other(i)).
  Permutation compose(const Permutation& other) const;
  Permutation inverse() const;

  /// Number of cycles, fixed points included.
  int cycle_count() const;

  bool operator==(const Permutation& other) const { return images_ == other.images_; }

 private:
  std::vector<int> images_;
};

/// All k! permutations in lexicographic order of their image vectors, so the
/// identity comes first. Capped at k = 5 to keep the factorial growth sane.
std::vector<Permutation> symmetric_group(int k);

/// Permutation operator on k systems of dimension d, acting by
/// P |i_0, ..., i_{k-1}> = |i_{s^{-1}(0)}, ..., i_{s^{-1}(k-1)}>, which makes
/// sigma -> P_sigma a group homomorphism with trace d^cycle_count.
MultipartiteOperator perm_operator(const Permutation& sigma, int d);

/// Basis of the algebra left invariant by the conjugation twirl below:
/// the partial transposes on system 0 of the permutation operators, listed
/// in symmetric_group(k) order.
std::vector<MultipartiteOperator> twirl_basis(int d, int k);

/// Gram matrix of twirl_basis under the Hilbert-Schmidt inner product:
/// entry (s, t) equals d^(cycle_count of s^-1 t).
Eigen::MatrixXd gram(int d, int k);

/// Combination sum_s coeffs[s] * twirl_basis[s] on k systems of dimension d.
struct CommutantElement {
  int k = 0;
  int d = 0;
  Eigen::VectorXcd coeffs;

  MultipartiteOperator expand() const;
};

/// Hermitian basis of the twirl invariant algebra over the reals: one element
/// per self inverse permutation, two (symmetric and antisymmetric pairing)
/// per mutually inverse pair.
std::vector<MultipartiteOperator> commutant_hermitian_basis(int d, int k);

/// Coefficients of the orthogonal projection of x onto the invariant algebra,
/// obtained by solving the Gram system. Rank deficient Gram matrices (d < k)
/// are handled by a spectral pseudo-inverse that drops eigenvalues below
/// 1e-10 relative to the largest.
CommutantElement twirl_coefficients(const MultipartiteOperator& x);

/// Exact twirl: the average of (U(x)... conjugations) over the unitary group,
/// with the complex conjugate representation acting on system 0 and the
/// fundamental on the rest. Computed as the orthogonal projection onto the
/// invariant algebra rather than by integration, so the result is exact up
/// to linear algebra roundoff. Idempotent by construction.
MultipartiteOperator twirl_exact(const MultipartiteOperator& x);

/// Haar distributed random unitary (QR of a Ginibre matrix with the phases
/// of the R diagonal folded back in).
Eigen::MatrixXcd haar_unitary(int d, Rng& rng);

/// Monte Carlo estimate of the same twirl from `samples` Haar samples.
/// Sample i draws its unitary from rng.split(i), so the result is invariant
/// under any batching of the sample loop.
MultipartiteOperator twirl_mc(const MultipartiteOperator& x, int samples, const Rng& rng);

/// Depolarizing parameter of the twirled version of a trace preserving
/// single output channel with equal input and output dimension: the twirl
/// maps every such channel to depolarizing_choi(d, p) and this returns p.
/// Also verifies that identity numerically and throws invariant_violation
/// if the twirled operator strays from the depolarizing form.
double channel_twirl_parameter(const ChoiOperator& choi);

/// x Gamma_{0,2} + y Gamma_{0,1} on three systems of dimension d, the
/// operator pencil whose extreme eigenvalues drive the dual feasibility
/// conditions of the two receiver problem.
MultipartiteOperator m_xy(double x, double y, int d);

/// Closed form spectrum of m_xy: two eigenvalue branches of multiplicity d
/// each and a zero eigenvalue of multiplicity d^3 - 2d. The multiplicity
/// statement is for the generic case where the branches are distinct and
/// nonzero (x, y > 0 suffices).
struct MxySpectrum {
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  int branch_multiplicity = 0;
  long zero_multiplicity = 0;
};
MxySpectrum m_xy_spectrum(double x, double y, int d);

/// Z = sum_{i=1}^{n} Gamma_{0,i} on n + 1 systems of dimension d.
MultipartiteOperator z_operator(int d, int n);

/// Largest eigenvalue of z_operator, equal to n + d - 1. Z is positive
/// semidefinite and singular, so its spectrum spans [0, n + d - 1].
double z_lambda_max(int d, int n);

}  // namespace vbcast
