#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <vector>

#include "vbcast/choi.hpp"
#include "vbcast/config.hpp"
#include "vbcast/errors.hpp"
#include "vbcast/operators.hpp"
#include "vbcast/rng.hpp"

using namespace vbcast;
using cd = std::complex<double>;

namespace {

double max_abs_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

MultipartiteOperator random_hermitian(const std::vector<int>& dims, Rng& rng) {
  long total = 1;
  for (int d : dims) total *= d;
  Eigen::MatrixXcd g(total, total);
  for (long r = 0; r < total; ++r) {
    for (long c = 0; c < total; ++c) g(r, c) = cd(rng.normal(), rng.normal());
  }
  return MultipartiteOperator(0.5 * (g + g.adjoint()), dims);
}

MultipartiteOperator random_state(int d, Rng& rng) {
  Eigen::MatrixXcd g(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) g(r, c) = cd(rng.normal(), rng.normal());
  }
  Eigen::MatrixXcd rho = g * g.adjoint();
  rho /= rho.trace();
  return MultipartiteOperator(rho, {d});
}

}  // namespace

TEST_CASE("kron composes dimensions and entries") {
  Eigen::MatrixXcd x(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  z << 1, 0, 0, -1;
  const MultipartiteOperator a(x, {2});
  const MultipartiteOperator b(z, {2});
  const MultipartiteOperator ab = kron(a, b);
  CHECK(ab.dims() == std::vector<int>{2, 2});
  CHECK(ab.entries()(0, 2) == cd(1.0, 0.0));
  CHECK(ab.entries()(1, 3) == cd(-1.0, 0.0));
  CHECK(ab.entries()(0, 0) == cd(0.0, 0.0));
}

TEST_CASE("partial transpose of the entangled operator is the swap") {
  const MultipartiteOperator gamma = umes(2);
  const MultipartiteOperator swapped = partial_transpose(gamma, {0});
  Eigen::MatrixXcd swap = Eigen::MatrixXcd::Zero(4, 4);
  swap(0, 0) = swap(1, 2) = swap(2, 1) = swap(3, 3) = 1.0;
  CHECK(max_abs_diff(swapped.entries(), swap) == 0.0);
  // Transposing the other system gives the same matrix here.
  CHECK(max_abs_diff(partial_transpose(gamma, {1}).entries(), swap) == 0.0);
}

TEST_CASE("partial trace marginals") {
  const MultipartiteOperator gamma = umes(3);
  const MultipartiteOperator marg = partial_trace(gamma, {1});
  CHECK(marg.dims() == std::vector<int>{3});
  CHECK(max_abs_diff(marg.entries(), Eigen::MatrixXcd::Identity(3, 3)) < 1e-15);

  Rng rng(11);
  const MultipartiteOperator big = random_hermitian({2, 3, 2}, rng);
  const MultipartiteOperator reduced = partial_trace(big, {1});
  CHECK(std::abs(trace(reduced) - trace(big)) < 1e-12);
  CHECK(reduced.dims() == std::vector<int>{2, 2});
}

TEST_CASE("reorder permutes systems") {
  Rng rng(5);
  const MultipartiteOperator a = random_hermitian({2}, rng);
  const MultipartiteOperator b = random_hermitian({3}, rng);
  const MultipartiteOperator ab = kron(a, b);
  const MultipartiteOperator ba = kron(b, a);
  CHECK(max_abs_diff(reorder(ab, {1, 0}).entries(), ba.entries()) < 1e-15);

  const MultipartiteOperator abc = random_hermitian({2, 2, 3}, rng);
  const MultipartiteOperator cycled = reorder(reorder(abc, {2, 0, 1}), {1, 2, 0});
  CHECK(max_abs_diff(cycled.entries(), abc.entries()) < 1e-15);
}

TEST_CASE("embed acts as identity elsewhere") {
  Rng rng(7);
  const MultipartiteOperator x = random_hermitian({2}, rng);
  const MultipartiteOperator eye2 = MultipartiteOperator::identity({2});
  const MultipartiteOperator expected = kron(kron(eye2, x), eye2);
  const MultipartiteOperator embedded = embed(x, {1}, {2, 2, 2});
  CHECK(max_abs_diff(embedded.entries(), expected.entries()) < 1e-15);

  // Two site embedding with swapped positions matches kron plus reorder.
  const MultipartiteOperator g = umes(2);
  const MultipartiteOperator direct = embed(g, {2, 0}, {2, 2, 2});
  const MultipartiteOperator via_kron = reorder(kron(g, eye2), {1, 2, 0});
  CHECK(max_abs_diff(direct.entries(), via_kron.entries()) < 1e-15);
}

TEST_CASE("link product composes states and channels") {
  Rng rng(3);
  const MultipartiteOperator rho = random_state(2, rng).with_labels({"A"});
  const MultipartiteOperator gamma = umes(2).with_labels({"A", "B"});

  SUBCASE("identity wire transports the state") {
    const MultipartiteOperator out = link_product(gamma, rho, {"A"});
    CHECK(out.labels() == std::vector<std::string>{"B"});
    CHECK(max_abs_diff(out.entries(), rho.entries()) < 1e-14);
  }

  SUBCASE("linking an identity performs a partial trace") {
    const MultipartiteOperator j = random_hermitian({2, 2, 2}, rng).with_labels({"A", "B", "C"});
    const MultipartiteOperator eye = MultipartiteOperator::identity({2}, {"C"});
    const MultipartiteOperator lhs = link_product(eye, j, {"C"});
    const MultipartiteOperator rhs = partial_trace(j, {2});
    CHECK(lhs.labels() == std::vector<std::string>{"A", "B"});
    CHECK(max_abs_diff(lhs.entries(), rhs.entries()) < 1e-13);
    // The product is symmetric once system order is accounted for.
    const MultipartiteOperator flipped = link_product(j, eye, {"C"});
    CHECK(max_abs_diff(flipped.entries(), rhs.entries()) < 1e-13);
  }

  SUBCASE("uncontracted duplicate labels are rejected") {
    const MultipartiteOperator other = random_hermitian({2}, rng).with_labels({"A"});
    CHECK_THROWS_AS((void)link_product(gamma, kron(rho, other.with_labels({"B"})), {"A"}),
                    argument_error);
  }
}

TEST_CASE("maximally entangled operator spectrum") {
  const Eigen::VectorXd evals = hermitian_eigenvalues(umes(2));
  REQUIRE(evals.size() == 4);
  CHECK(std::abs(evals(0)) < 1e-12);
  CHECK(std::abs(evals(1)) < 1e-12);
  CHECK(std::abs(evals(2)) < 1e-12);
  CHECK(evals(3) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(trace(mes(5)) - cd(1.0, 0.0)) < 1e-12);
}

TEST_CASE("depolarizing channel facts") {
  SUBCASE("fidelity at p equal one half and d two") {
    CHECK(channel_fidelity(depolarizing_choi(2, 0.5)) == doctest::Approx(0.625).epsilon(1e-13));
  }
  SUBCASE("action on a basis state") {
    Eigen::MatrixXcd zero = Eigen::MatrixXcd::Zero(2, 2);
    zero(0, 0) = 1.0;
    const MultipartiteOperator out =
        apply_channel(depolarizing_choi(2, 0.3), MultipartiteOperator(zero, {2}));
    CHECK(std::abs(out.entries()(0, 0) - cd(0.85, 0.0)) < 1e-14);
    CHECK(std::abs(out.entries()(1, 1) - cd(0.15, 0.0)) < 1e-14);
    CHECK(std::abs(out.entries()(0, 1)) < 1e-14);
  }
  SUBCASE("predicates and the positivity boundary") {
    const ChoiOperator mid = depolarizing_choi(3, 0.7);
    CHECK(is_trace_preserving(mid));
    CHECK(is_completely_positive(mid));
    CHECK(is_trace_nonincreasing(mid));
    const double pmax = 9.0 / 8.0;
    CHECK(is_completely_positive(depolarizing_choi(3, pmax)));
    CHECK_THROWS_AS((void)depolarizing_choi(3, pmax + 1e-6), argument_error);
    CHECK_THROWS_AS((void)depolarizing_choi(2, -0.1), argument_error);
  }
}

TEST_CASE("identity channel is a perfect wire") {
  Rng rng(19);
  const MultipartiteOperator rho = random_state(3, rng);
  const ChoiOperator wire = identity_choi(3);
  CHECK(channel_fidelity(wire) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(max_abs_diff(apply_channel(wire, rho).entries(), rho.entries()) < 1e-13);
}

TEST_CASE("unitary conjugation through a Choi operator") {
  // J_U = (1 (x) U) Gamma (1 (x) U)^dagger represents rho -> U rho U^dagger.
  Rng rng(23);
  Eigen::MatrixXcd h(2, 2);
  h << 1, 1, 1, -1;
  h /= std::sqrt(2.0);
  Eigen::MatrixXcd one_u = Eigen::MatrixXcd::Zero(4, 4);
  one_u.block(0, 0, 2, 2) = h;
  one_u.block(2, 2, 2, 2) = h;
  const Eigen::MatrixXcd ju = one_u * umes(2).entries() * one_u.adjoint();
  const ChoiOperator choi(MultipartiteOperator(ju, {2, 2}), 0, {1});
  CHECK(is_trace_preserving(choi));
  const MultipartiteOperator rho = random_state(2, rng);
  const MultipartiteOperator expected(h * rho.entries() * h.adjoint(), {2});
  CHECK(max_abs_diff(apply_channel(choi, rho).entries(), expected.entries()) < 1e-13);
}

TEST_CASE("broadcast fidelities of a one sided wire") {
  // Perfect wire to the first receiver, nothing to the second.
  const MultipartiteOperator j = kron(umes(2), 0.5 * MultipartiteOperator::identity({2}));
  const ChoiOperator choi(j, 0, {1, 2});
  CHECK(is_trace_preserving(choi));
  CHECK(broadcast_fidelity(choi, 0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(broadcast_fidelity(choi, 1) == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(average_broadcast_fidelity(choi) == doctest::Approx(0.625).epsilon(1e-13));
}

TEST_CASE("hermitian eigenvalue guardrails") {
  Eigen::MatrixXcd m(2, 2);
  m << 0, 1, 0, 0;
  CHECK_THROWS_AS((void)hermitian_eigenvalues(MultipartiteOperator(m, {2})), argument_error);

  Rng rng(31);
  const MultipartiteOperator h = random_hermitian({2, 3}, rng);
  const Eigen::VectorXd evals = hermitian_eigenvalues(h);
  for (int i = 1; i < evals.size(); ++i) CHECK(evals(i - 1) <= evals(i));
  CHECK(evals.sum() == doctest::Approx(trace(h).real()).epsilon(1e-11));
}

TEST_CASE("operator JSON round trip") {
  Rng rng(41);
  const MultipartiteOperator h = random_hermitian({2, 3}, rng);
  const MultipartiteOperator back = operator_from_json_string(to_json_string(h));
  CHECK(back.dims() == h.dims());
  CHECK(max_abs_diff(back.entries(), h.entries()) == 0.0);

  CHECK_THROWS_AS((void)operator_from_json_string("not json"), argument_error);
  CHECK_THROWS_AS((void)operator_from_json_string("{\"dims\": [2]}"), argument_error);
  CHECK_THROWS_AS((void)operator_from_json_string(
                      "{\"dims\": [2], \"re\": [[0, 0]], \"im\": [[0, 0]]}"),
                  argument_error);
}

TEST_CASE("choi JSON round trip") {
  const ChoiOperator choi = depolarizing_choi(2, 0.25);
  const ChoiOperator back = choi_from_json_string(to_json_string(choi));
  CHECK(back.input_index == 0);
  CHECK(back.output_indices == std::vector<int>{1});
  CHECK(max_abs_diff(back.op.entries(), choi.op.entries()) == 0.0);
  CHECK_THROWS_AS((void)choi_from_json_string("{\"op\": 3}"), argument_error);
}

TEST_CASE("dimension ceiling is enforced") {
  const int original = config::max_dim();
  config::set_max_dim(64);
  CHECK_THROWS_AS((void)MultipartiteOperator::zero({2, 2, 2, 2, 2, 2, 2}), size_error);
  CHECK_NOTHROW((void)MultipartiteOperator::zero({2, 2, 2, 2, 2, 2}));
  config::set_max_dim(original);
}

TEST_CASE("splittable rng reproducibility") {
  Rng a(123), b(123);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng child1 = Rng(9).split(4);
  Rng child2 = Rng(9).split(4);
  CHECK(child1.next_u64() == child2.next_u64());
  CHECK(Rng(9).split(4).next_u64() != Rng(9).split(5).next_u64());

  // Uniform stays inside [0, 1) and has a sane mean.
  Rng u(77);
  double acc = 0.0;
  for (int i = 0; i < 4000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    acc += x;
  }
  CHECK(acc / 4000.0 == doctest::Approx(0.5).epsilon(0.05));
}
