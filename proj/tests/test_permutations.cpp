#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <vector>

#include "vbcast/choi.hpp"
#include "vbcast/errors.hpp"
#include "vbcast/operators.hpp"
#include "vbcast/permutations.hpp"
#include "vbcast/rng.hpp"

using namespace vbcast;
using cd = std::complex<double>;

namespace {

double max_abs_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

Eigen::MatrixXcd kron_matrix(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i) {
    for (long j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// Random trace preserving completely positive map from one d dimensional
// system to `outs` systems of dimension d, via Kraus operators normalised
// with an inverse square root.
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

}  // namespace

TEST_CASE("permutation group structure") {
  const auto s3 = symmetric_group(3);
  REQUIRE(s3.size() == 6);
  CHECK(s3[0] == Permutation::identity(3));
  for (const auto& a : s3) {
    CHECK(a.compose(a.inverse()) == Permutation::identity(3));
    for (const auto& b : s3) {
      // Homomorphism property of the operator representation, exact.
      const Eigen::MatrixXcd pa = perm_operator(a, 2).entries();
      const Eigen::MatrixXcd pb = perm_operator(b, 2).entries();
      const Eigen::MatrixXcd pab = perm_operator(a.compose(b), 2).entries();
      CHECK(max_abs_diff(pa * pb, pab) == 0.0);
    }
  }
  CHECK_THROWS_AS((void)symmetric_group(6), size_error);
  CHECK_THROWS_AS((void)Permutation({0, 0, 1}), argument_error);
}

TEST_CASE("permutation operator convention and traces") {
  // images {1, 2, 0} sends |a b c> to |c a b>.
  const Permutation cyc({1, 2, 0});
  const auto p = perm_operator(cyc, 2);
  CHECK(p.entries()(5, 3) == cd(1.0, 0.0));  // |011> -> |101>
  for (int d : {2, 3}) {
    for (const auto& sigma : symmetric_group(3)) {
      const double tr = trace(perm_operator(sigma, d)).real();
      CHECK(tr == doctest::Approx(std::pow(double(d), sigma.cycle_count())).epsilon(1e-12));
    }
  }
}

TEST_CASE("gram matrix values") {
  const Eigen::MatrixXd g22 = gram(2, 2);
  CHECK(g22(0, 0) == 4.0);
  CHECK(g22(0, 1) == 2.0);
  CHECK(g22(1, 0) == 2.0);
  CHECK(g22(1, 1) == 4.0);

  const Eigen::MatrixXd g23 = gram(2, 3);
  CHECK(max_abs_diff(g23.cast<cd>(), g23.transpose().cast<cd>()) == 0.0);
  for (int s = 0; s < 6; ++s) CHECK(g23(s, s) == 8.0);
  // Rank deficient below k systems: smallest eigenvalue collapses to zero.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g23);
  CHECK(std::abs(es.eigenvalues()(0)) < 1e-9);
}

TEST_CASE("exact twirl is an idempotent projection") {
  Rng rng(101);
  for (const auto& shape : std::vector<std::pair<int, int>>{{2, 2}, {3, 2}, {2, 3}, {3, 3}}) {
    const int d = shape.first;
    const int k = shape.second;
    std::vector<int> dims(static_cast<size_t>(k), d);
    long total = 1;
    for (int dim : dims) total *= dim;
    Eigen::MatrixXcd g(total, total);
    for (long r = 0; r < total; ++r) {
      for (long c = 0; c < total; ++c) g(r, c) = cd(rng.normal(), rng.normal());
    }
    const MultipartiteOperator x(0.5 * (g + g.adjoint()), dims);
    const MultipartiteOperator once = twirl_exact(x);
    const MultipartiteOperator twice = twirl_exact(once);
    CHECK(max_abs_diff(twice.entries(), once.entries()) < 1e-11);
  }
}

TEST_CASE("twirl fixes the invariant algebra") {
  for (const auto& b : twirl_basis(2, 3)) {
    CHECK(max_abs_diff(twirl_exact(b).entries(), b.entries()) < 1e-11);
  }
  // The entangled operator itself is the partial transpose of a swap.
  CHECK(max_abs_diff(twirl_exact(umes(3)).entries(), umes(3).entries()) < 1e-11);
}

TEST_CASE("hermitian commutant basis") {
  for (const auto& shape : std::vector<std::pair<int, int>>{{2, 2}, {2, 3}, {3, 3}, {2, 4}}) {
    const auto basis = commutant_hermitian_basis(shape.first, shape.second);
    // One element per self inverse permutation, two per inverse pair,
    // totalling k! real dimensions.
    long expected = 1;
    for (int j = 2; j <= shape.second; ++j) expected *= j;
    CHECK(static_cast<long>(basis.size()) == expected);
    for (const auto& h : basis) CHECK(h.hermitian_deviation() < 1e-12);
  }
}

TEST_CASE("twirled channels are depolarizing") {
  Rng rng(7);
  for (int d : {2, 3}) {
    for (int rep = 0; rep < 10; ++rep) {
      const ChoiOperator choi = random_cptp_choi(d, 1, 3, rng);
      const double f = channel_fidelity(choi);
      const double p = channel_twirl_parameter(choi);
      const double dd = double(d) * d;
      CHECK(p == doctest::Approx((1.0 - f) * dd / (dd - 1.0)).epsilon(1e-10));
      const MultipartiteOperator twirled = twirl_exact(choi.op);
      CHECK(max_abs_diff(twirled.entries(), depolarizing_choi(d, p).op.entries()) < 1e-10);
    }
  }
}

TEST_CASE("twirl preserves trace preservation and receiver overlaps") {
  Rng rng(13);
  const ChoiOperator choi = random_cptp_choi(2, 2, 4, rng);
  REQUIRE(is_trace_preserving(choi));
  const MultipartiteOperator twirled = twirl_exact(choi.op);

  const MultipartiteOperator marg = partial_trace(twirled, {1, 2});
  CHECK(max_abs_diff(marg.entries(), Eigen::MatrixXcd::Identity(2, 2)) < 1e-11);

  const std::vector<int> dims{2, 2, 2};
  for (const auto& positions : std::vector<std::vector<int>>{{0, 1}, {0, 2}}) {
    const MultipartiteOperator overlap_op = embed(umes(2), positions, dims);
    const cd before = (choi.op.entries() * overlap_op.entries()).trace();
    const cd after = (twirled.entries() * overlap_op.entries()).trace();
    CHECK(std::abs(before - after) < 1e-11);
  }
}

TEST_CASE("haar unitaries are unitary and reproducible") {
  Rng rng(55);
  for (int d : {2, 5}) {
    Rng stream = rng.split(d);
    const Eigen::MatrixXcd u = haar_unitary(d, stream);
    CHECK(max_abs_diff(u.adjoint() * u, Eigen::MatrixXcd::Identity(d, d)) < 1e-12);
  }
  Rng s1 = rng.split(3);
  Rng s2 = rng.split(3);
  CHECK(max_abs_diff(haar_unitary(4, s1), haar_unitary(4, s2)) == 0.0);
}

TEST_CASE("monte carlo twirl approaches the exact twirl") {
  Rng data_rng(31);
  Eigen::MatrixXcd g(4, 4);
  for (long r = 0; r < 4; ++r) {
    for (long c = 0; c < 4; ++c) g(r, c) = cd(data_rng.normal(), data_rng.normal());
  }
  const MultipartiteOperator x(0.5 * (g + g.adjoint()), {2, 2});
  const MultipartiteOperator exact = twirl_exact(x);

  const Rng sampler(2024);
  const MultipartiteOperator rough = twirl_mc(x, 64, sampler);
  const MultipartiteOperator fine = twirl_mc(x, 4096, sampler);
  const double err_rough = max_abs_diff(rough.entries(), exact.entries());
  const double err_fine = max_abs_diff(fine.entries(), exact.entries());
  CHECK(err_fine < err_rough);
  CHECK(err_fine < 0.1);

  // Identical sampler seeds give identical estimates.
  const MultipartiteOperator again = twirl_mc(x, 64, Rng(2024));
  CHECK(max_abs_diff(again.entries(), rough.entries()) == 0.0);
}

TEST_CASE("pencil spectrum matches the dense solver") {
  Rng rng(77);
  for (int d : {2, 3}) {
    for (int rep = 0; rep < 20; ++rep) {
      const double x = 0.1 + 1.9 * rng.uniform();
      const double y = 0.1 + 1.9 * rng.uniform();
      const MxySpectrum spec = m_xy_spectrum(x, y, d);
      const Eigen::VectorXd evals = hermitian_eigenvalues(m_xy(x, y, d));
      long plus = 0, minus = 0, zero = 0;
      for (long i = 0; i < evals.size(); ++i) {
        if (std::abs(evals(i) - spec.lambda_plus) < 1e-8) {
          ++plus;
        } else if (std::abs(evals(i) - spec.lambda_minus) < 1e-8) {
          ++minus;
        } else if (std::abs(evals(i)) < 1e-8) {
          ++zero;
        }
      }
      CHECK(plus == spec.branch_multiplicity);
      CHECK(minus == spec.branch_multiplicity);
      CHECK(zero == spec.zero_multiplicity);
      CHECK(plus + minus + zero == evals.size());
    }
  }
}

TEST_CASE("receiver sum operator spectrum") {
  for (int d : {2, 3}) {
    for (int n : {2, 3}) {
      const Eigen::VectorXd evals = hermitian_eigenvalues(z_operator(d, n));
      CHECK(std::abs(evals(evals.size() - 1) - z_lambda_max(d, n)) < 1e-10);
      CHECK(evals(0) > -1e-10);       // positive semidefinite
      CHECK(std::abs(evals(0)) < 1e-8);  // and singular
    }
  }
}
