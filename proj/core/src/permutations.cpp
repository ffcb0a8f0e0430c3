#include "vbcast/permutations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "vbcast/config.hpp"
#include "vbcast/errors.hpp"

namespace vbcast {

namespace {

constexpr int kMaxTwirlSystems = 5;

long ipow(int base, int exp) {
  long p = 1;
  for (int i = 0; i < exp; ++i) p *= base;
  return p;
}

void validate_twirl_shape(int d, int k) {
  if (d < 2) throw argument_error("twirl: local dimension must be at least 2");
  if (k < 1) throw argument_error("twirl: at least one system is required");
  if (k > kMaxTwirlSystems) {
    std::ostringstream msg;
    msg << "twirl: " << k << " systems exceed the supported maximum of " << kMaxTwirlSystems
        << " (the invariant basis grows factorially)";
    throw size_error(msg.str());
  }
}

// Equal local dimension of a k system operator, validated.
int uniform_dim(const MultipartiteOperator& x) {
  const int k = x.num_systems();
  if (k == 0) throw argument_error("twirl: operator has no systems");
  const int d = x.dims()[0];
  for (int dim : x.dims()) {
    if (dim != d) throw argument_error("twirl: all systems must share one dimension");
  }
  validate_twirl_shape(d, k);
  return d;
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

// Spectral pseudo-inverse solve of the (symmetric positive semidefinite)
// Gram system G c = v. Eigenvalues below 1e-10 of the largest are treated
// as exact zeros; they appear when d < k and the permutation operators
// become linearly dependent.
Eigen::VectorXcd gram_solve(const Eigen::MatrixXd& g, const Eigen::VectorXcd& v) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  if (es.info() != Eigen::Success) {
    throw numeric_error("twirl: Gram eigendecomposition failed");
  }
  const Eigen::VectorXd& w = es.eigenvalues();
  const double cutoff = 1e-10 * std::max(w(w.size() - 1), 1.0);
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(v.size());
  for (long j = 0; j < w.size(); ++j) {
    if (w(j) <= cutoff) continue;
    const Eigen::VectorXcd basis = es.eigenvectors().col(j).cast<std::complex<double>>();
    c += basis * (basis.dot(v) / w(j));
  }
  return c;
}

}  // namespace

Permutation::Permutation(std::vector<int> images) : images_(std::move(images)) {
  std::vector<bool> seen(images_.size(), false);
  for (int v : images_) {
    if (v < 0 || v >= static_cast<int>(images_.size()) || seen[static_cast<size_t>(v)]) {
      throw argument_error("Permutation: images must be a bijection on {0..k-1}");
    }
    seen[static_cast<size_t>(v)] = true;
  }
}

Permutation Permutation::identity(int k) {
  if (k < 1) throw argument_error("Permutation: size must be positive");
  std::vector<int> images(static_cast<size_t>(k));
  std::iota(images.begin(), images.end(), 0);
  return Permutation(std::move(images));
}

Permutation Permutation::compose(const Permutation& other) const {
  if (size() != other.size()) {
    throw argument_error("Permutation: cannot compose permutations of different sizes");
  }
  std::vector<int> images(images_.size());
  for (size_t i = 0; i < images_.size(); ++i) {
    images[i] = images_[static_cast<size_t>(other.images_[i])];
  }
  return Permutation(std::move(images));
}

Permutation Permutation::inverse() const {
  std::vector<int> images(images_.size());
  for (size_t i = 0; i < images_.size(); ++i) {
    images[static_cast<size_t>(images_[i])] = static_cast<int>(i);
  }
  return Permutation(std::move(images));
}

int Permutation::cycle_count() const {
  std::vector<bool> seen(images_.size(), false);
  int cycles = 0;
  for (size_t start = 0; start < images_.size(); ++start) {
    if (seen[start]) continue;
    ++cycles;
    size_t cur = start;
    while (!seen[cur]) {
      seen[cur] = true;
      cur = static_cast<size_t>(images_[cur]);
    }
  }
  return cycles;
}

std::vector<Permutation> symmetric_group(int k) {
  if (k < 1) throw argument_error("symmetric_group: k must be positive");
  if (k > kMaxTwirlSystems) {
    throw size_error("symmetric_group: k is capped at 5");
  }
  std::vector<int> images(static_cast<size_t>(k));
  std::iota(images.begin(), images.end(), 0);
  std::vector<Permutation> group;
  do {
    group.emplace_back(images);
  } while (std::next_permutation(images.begin(), images.end()));
  return group;
}

MultipartiteOperator perm_operator(const Permutation& sigma, int d) {
  if (d < 2) throw argument_error("perm_operator: dimension must be at least 2");
  const int k = sigma.size();
  const long total = ipow(d, k);
  const Permutation inv = sigma.inverse();
  Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(total, total);
  std::vector<int> in_digit(static_cast<size_t>(k), 0);
  for (long col = 0; col < total; ++col) {
    long row = 0;
    for (int m = 0; m < k; ++m) {
      row = row * d + in_digit[static_cast<size_t>(inv(m))];
    }
    mat(row, col) = 1.0;
    for (int j = k - 1; j >= 0; --j) {
      if (++in_digit[static_cast<size_t>(j)] < d) break;
      in_digit[static_cast<size_t>(j)] = 0;
    }
  }
  return MultipartiteOperator(std::move(mat), std::vector<int>(static_cast<size_t>(k), d));
}

std::vector<MultipartiteOperator> twirl_basis(int d, int k) {
  validate_twirl_shape(d, k);
  std::vector<MultipartiteOperator> basis;
  for (const Permutation& sigma : symmetric_group(k)) {
    basis.push_back(partial_transpose(perm_operator(sigma, d), {0}));
  }
  return basis;
}

Eigen::MatrixXd gram(int d, int k) {
  validate_twirl_shape(d, k);
  const std::vector<Permutation> group = symmetric_group(k);
  const long n = static_cast<long>(group.size());
  Eigen::MatrixXd g(n, n);
  for (long s = 0; s < n; ++s) {
    const Permutation sinv = group[static_cast<size_t>(s)].inverse();
    for (long t = 0; t < n; ++t) {
      const int cycles = sinv.compose(group[static_cast<size_t>(t)]).cycle_count();
      g(s, t) = static_cast<double>(ipow(d, cycles));
    }
  }
  return g;
}

MultipartiteOperator CommutantElement::expand() const {
  const std::vector<MultipartiteOperator> basis = twirl_basis(d, k);
  if (coeffs.size() != static_cast<long>(basis.size())) {
    throw argument_error("CommutantElement: coefficient count must equal k!");
  }
  MultipartiteOperator acc = MultipartiteOperator::zero(std::vector<int>(static_cast<size_t>(k), d));
  for (long s = 0; s < coeffs.size(); ++s) {
    acc = acc + coeffs(s) * basis[static_cast<size_t>(s)];
  }
  return acc;
}

std::vector<MultipartiteOperator> commutant_hermitian_basis(int d, int k) {
  const std::vector<Permutation> group = symmetric_group(k);
  const std::vector<MultipartiteOperator> basis = twirl_basis(d, k);
  std::vector<MultipartiteOperator> herm;
  const std::complex<double> imag_unit(0.0, 1.0);
  for (size_t s = 0; s < group.size(); ++s) {
    const Permutation inv = group[s].inverse();
    if (inv == group[s]) {
      herm.push_back(basis[s]);
      continue;
    }
    // Visit each mutually inverse pair once.
    if (inv.images() < group[s].images()) continue;
    const size_t t = static_cast<size_t>(
        std::lower_bound(group.begin(), group.end(), inv,
                         [](const Permutation& a, const Permutation& b) {
                           return a.images() < b.images();
                         }) -
        group.begin());
    herm.push_back(basis[s] + basis[t]);
    herm.push_back(imag_unit * (basis[s] - basis[t]));
  }
  return herm;
}

CommutantElement twirl_coefficients(const MultipartiteOperator& x) {
  const int d = uniform_dim(x);
  const int k = x.num_systems();
  const std::vector<MultipartiteOperator> basis = twirl_basis(d, k);
  Eigen::VectorXcd v(static_cast<long>(basis.size()));
  for (size_t s = 0; s < basis.size(); ++s) {
    v(static_cast<long>(s)) = (basis[s].entries().adjoint() * x.entries()).trace();
  }
  CommutantElement element;
  element.k = k;
  element.d = d;
  element.coeffs = gram_solve(gram(d, k), v);
  return element;
}

MultipartiteOperator twirl_exact(const MultipartiteOperator& x) {
  return twirl_coefficients(x).expand().with_labels(x.labels());
}

Eigen::MatrixXcd haar_unitary(int d, Rng& rng) {
  if (d < 1) throw argument_error("haar_unitary: dimension must be positive");
  Eigen::MatrixXcd ginibre(d, d);
  const double scale = 1.0 / std::sqrt(2.0);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      ginibre(r, c) = scale * std::complex<double>(rng.normal(), rng.normal());
    }
  }
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(ginibre);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fold the phases of the R diagonal into Q; without this step the
  // distribution of Q is biased away from Haar.
  for (int j = 0; j < d; ++j) {
    const std::complex<double> rjj = r(j, j);
    const double mag = std::abs(rjj);
    q.col(j) *= (mag > 0.0) ? rjj / mag : std::complex<double>(1.0, 0.0);
  }
  return q;
}

MultipartiteOperator twirl_mc(const MultipartiteOperator& x, int samples, const Rng& rng) {
  const int d = uniform_dim(x);
  const int k = x.num_systems();
  if (samples < 1) throw argument_error("twirl_mc: at least one sample is required");
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(x.total_dim(), x.total_dim());
  for (int i = 0; i < samples; ++i) {
    Rng stream = rng.split(static_cast<std::uint64_t>(i));
    const Eigen::MatrixXcd u = haar_unitary(d, stream);
    Eigen::MatrixXcd w = u.conjugate();
    for (int j = 1; j < k; ++j) w = kron_matrix(w, u);
    acc += w * x.entries() * w.adjoint();
  }
  acc /= static_cast<double>(samples);
  return MultipartiteOperator(std::move(acc), x.dims(), x.labels());
}

double channel_twirl_parameter(const ChoiOperator& choi) {
  if (choi.output_indices.size() != 1 || choi.output_dims()[0] != choi.input_dim()) {
    throw argument_error(
        "channel_twirl_parameter: a single output of the input dimension is required");
  }
  if (!is_trace_preserving(choi)) {
    throw argument_error("channel_twirl_parameter: the map must be trace preserving");
  }
  const int d = choi.input_dim();
  const double dd = static_cast<double>(d) * d;
  double p = (1.0 - channel_fidelity(choi)) * dd / (dd - 1.0);
  // Roundoff can push p marginally outside the valid range.
  p = std::clamp(p, 0.0, dd / (dd - 1.0));

  // The twirl of any trace preserving channel is depolarizing with exactly
  // this parameter; verify before reporting. The conjugate representation
  // acts on the input system, so bring it to position 0 first.
  MultipartiteOperator op = choi.op;
  if (choi.input_index != 0) op = reorder(op, {choi.input_index, 1 - choi.input_index});
  const MultipartiteOperator twirled = twirl_exact(op);
  const double defect =
      (twirled.entries() - depolarizing_choi(d, p).op.entries()).cwiseAbs().maxCoeff();
  if (defect > 1e-8) {
    std::ostringstream msg;
    msg << "channel_twirl_parameter: twirled operator deviates from the depolarizing form by "
        << defect;
    throw invariant_violation(msg.str());
  }
  return p;
}

MultipartiteOperator m_xy(double x, double y, int d) {
  if (d < 2) throw argument_error("m_xy: dimension must be at least 2");
  const std::vector<int> dims{d, d, d};
  const MultipartiteOperator gamma = umes(d);
  return x * embed(gamma, {0, 2}, dims) + y * embed(gamma, {0, 1}, dims);
}

MxySpectrum m_xy_spectrum(double x, double y, int d) {
  if (d < 2) throw argument_error("m_xy_spectrum: dimension must be at least 2");
  const double diff = (x - y) * d;
  const double disc = std::sqrt(diff * diff + 4.0 * x * y);
  MxySpectrum spec;
  spec.lambda_plus = 0.5 * ((x + y) * d + disc);
  spec.lambda_minus = 0.5 * ((x + y) * d - disc);
  spec.branch_multiplicity = d;
  spec.zero_multiplicity = static_cast<long>(d) * d * d - 2L * d;
  return spec;
}

MultipartiteOperator z_operator(int d, int n) {
  if (d < 2) throw argument_error("z_operator: dimension must be at least 2");
  if (n < 1) throw argument_error("z_operator: at least one receiver is required");
  const std::vector<int> dims(static_cast<size_t>(n) + 1, d);
  const MultipartiteOperator gamma = umes(d);
  MultipartiteOperator acc = MultipartiteOperator::zero(dims);
  for (int i = 1; i <= n; ++i) acc = acc + embed(gamma, {0, i}, dims);
  return acc;
}

double z_lambda_max(int d, int n) {
  if (d < 2) throw argument_error("z_lambda_max: dimension must be at least 2");
  if (n < 1) throw argument_error("z_lambda_max: at least one receiver is required");
  return static_cast<double>(n + d - 1);
}

}  // namespace vbcast
