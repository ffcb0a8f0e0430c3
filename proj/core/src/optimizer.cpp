#include "vbcast/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vbcast/choi.hpp"
#include "vbcast/config.hpp"
#include "vbcast/errors.hpp"
#include "vbcast/permutations.hpp"

namespace vbcast {

namespace {

constexpr std::complex<double> kImag{0.0, 1.0};

double hermitian_defect(const Eigen::MatrixXcd& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

// Real coordinates of a Hermitian matrix: the diagonal first, then sqrt(2)
// scaled real and imaginary parts of the upper triangle. The map is an
// isometry, so inner products of coordinate vectors equal Hilbert-Schmidt
// products of the matrices.
Eigen::VectorXd hvec(const Eigen::MatrixXcd& m) {
  const int dim = static_cast<int>(m.rows());
  Eigen::VectorXd v(static_cast<long>(dim) * dim);
  for (int i = 0; i < dim; ++i) v(i) = m(i, i).real();
  const double rt2 = std::sqrt(2.0);
  int off = dim;
  for (int c = 1; c < dim; ++c) {
    for (int r = 0; r < c; ++r) {
      v(off++) = rt2 * m(r, c).real();
      v(off++) = rt2 * m(r, c).imag();
    }
  }
  return v;
}

Eigen::MatrixXcd hunvec(const Eigen::VectorXd& v, int dim) {
  Eigen::MatrixXcd m(dim, dim);
  for (int i = 0; i < dim; ++i) m(i, i) = v(i);
  const double irt2 = 1.0 / std::sqrt(2.0);
  int off = dim;
  for (int c = 1; c < dim; ++c) {
    for (int r = 0; r < c; ++r) {
      const std::complex<double> entry{v(off) * irt2, v(off + 1) * irt2};
      m(r, c) = entry;
      m(c, r) = std::conj(entry);
      off += 2;
    }
  }
  return m;
}

// Standard Hermitian basis of h x h matrices: unit diagonals, then the
// symmetric and antisymmetric combinations of each off diagonal pair.
std::vector<Eigen::MatrixXcd> hermitian_matrix_basis(int h) {
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(static_cast<size_t>(h) * h);
  for (int i = 0; i < h; ++i) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(h, h);
    m(i, i) = 1.0;
    out.push_back(std::move(m));
  }
  for (int c = 1; c < h; ++c) {
    for (int r = 0; r < c; ++r) {
      Eigen::MatrixXcd sym = Eigen::MatrixXcd::Zero(h, h);
      sym(r, c) = 1.0;
      sym(c, r) = 1.0;
      out.push_back(std::move(sym));
      Eigen::MatrixXcd asym = Eigen::MatrixXcd::Zero(h, h);
      asym(r, c) = kImag;
      asym(c, r) = -kImag;
      out.push_back(std::move(asym));
    }
  }
  return out;
}

// Hermitian spanning set of the orthogonal complement of the twirl invariant
// algebra on k systems of dimension d. Obtained by projecting the full
// Hermitian space onto the invariant span and taking the eigenvectors of the
// projector with eigenvalue zero, which stays well defined when the span
// elements are linearly dependent (small d).
std::vector<Eigen::MatrixXcd> invariant_complement(int d, int k) {
  const auto span = commutant_hermitian_basis(d, k);
  const int m = static_cast<int>(span.front().total_dim());
  const long n2 = static_cast<long>(m) * m;

  Eigen::MatrixXd b(n2, static_cast<long>(span.size()));
  for (size_t l = 0; l < span.size(); ++l) b.col(static_cast<long>(l)) = hvec(span[l].entries());

  const Eigen::MatrixXd g = b.transpose() * b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  if (es.info() != Eigen::Success) throw numeric_error("invariant span projection failed");
  const double cutoff = 1e-10 * std::max(es.eigenvalues().maxCoeff(), 1.0);
  Eigen::MatrixXd ginv = Eigen::MatrixXd::Zero(g.rows(), g.cols());
  for (long i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()(i) > cutoff) {
      ginv += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose() / es.eigenvalues()(i);
    }
  }

  const Eigen::MatrixXd proj = b * ginv * b.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esp(proj);
  if (esp.info() != Eigen::Success) throw numeric_error("invariant span projection failed");
  std::vector<Eigen::MatrixXcd> out;
  for (long i = 0; i < esp.eigenvalues().size(); ++i) {
    if (esp.eigenvalues()(i) < 0.5) out.push_back(hunvec(esp.eigenvectors().col(i), m));
  }
  return out;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXcd& m) {
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (long r = 0; r < m.rows(); ++r) {
    nlohmann::json row_re = nlohmann::json::array();
    nlohmann::json row_im = nlohmann::json::array();
    for (long c = 0; c < m.cols(); ++c) {
      row_re.push_back(m(r, c).real());
      row_im.push_back(m(r, c).imag());
    }
    re.push_back(std::move(row_re));
    im.push_back(std::move(row_im));
  }
  return nlohmann::json{{"re", std::move(re)}, {"im", std::move(im)}};
}

Eigen::MatrixXcd matrix_from_json(const nlohmann::json& j, int dim) {
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (static_cast<int>(re.size()) != dim || static_cast<int>(im.size()) != dim) {
    throw argument_error("matrix block does not match the declared dimension");
  }
  Eigen::MatrixXcd m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    const auto& row_re = re.at(r);
    const auto& row_im = im.at(r);
    if (static_cast<int>(row_re.size()) != dim || static_cast<int>(row_im.size()) != dim) {
      throw argument_error("matrix block does not match the declared dimension");
    }
    for (int c = 0; c < dim; ++c) {
      m(r, c) = std::complex<double>(row_re.at(c).get<double>(), row_im.at(c).get<double>());
    }
  }
  return m;
}

long factorial_of(int k) {
  long f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

int integer_power_dim(int d, int k) {
  long m = 1;
  for (int i = 0; i < k; ++i) {
    m *= d;
    if (m > config::max_dim()) {
      throw size_error("broadcast program blocks exceed the configured dimension limit");
    }
  }
  return static_cast<int>(m);
}

void validate_broadcast_sizes(int d, int n) {
  if (d < 2) throw argument_error("broadcast programs need dimension at least 2");
  if (n < 2) throw argument_error("broadcast programs need at least two receivers");
  if (factorial_of(n + 1) > 120) {
    throw size_error("broadcast programs are limited to group size 120 (four receivers)");
  }
}

// Shared scaffolding for the two program builders: pins the cross terms
// between the diagonal blocks to zero and restricts both channel blocks to
// the twirl invariant span.
void add_structure_constraints(SdpStandardForm& form, const std::vector<int>& block_sizes, int d,
                               int k) {
  const int dim = form.dim;
  std::vector<int> block_of(static_cast<size_t>(dim));
  {
    int blk = 0;
    int pos = 0;
    for (int i = 0; i < dim; ++i) {
      if (i - pos == block_sizes[static_cast<size_t>(blk)]) {
        pos = i;
        ++blk;
      }
      block_of[static_cast<size_t>(i)] = blk;
    }
  }
  for (int c = 0; c < dim; ++c) {
    for (int r = 0; r < c; ++r) {
      if (block_of[static_cast<size_t>(r)] == block_of[static_cast<size_t>(c)]) continue;
      Eigen::MatrixXcd sym = Eigen::MatrixXcd::Zero(dim, dim);
      sym(r, c) = 1.0;
      sym(c, r) = 1.0;
      form.equalities.push_back({std::move(sym), 0.0});
      Eigen::MatrixXcd asym = Eigen::MatrixXcd::Zero(dim, dim);
      asym(r, c) = kImag;
      asym(c, r) = -kImag;
      form.equalities.push_back({std::move(asym), 0.0});
    }
  }

  const int m = block_sizes[0];
  for (const auto& cm : invariant_complement(d, k)) {
    for (int off : {0, m}) {
      Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
      a.block(off, off, m, m) = cm;
      form.equalities.push_back({std::move(a), 0.0});
    }
  }
}

// ---------------------------------------------------------------------------
// Barrier solver internals
// ---------------------------------------------------------------------------

constexpr double kFeasMargin = 1e-7;
constexpr double kObjectiveFloor = -1e10;
constexpr int kMaxOuter = 200;
constexpr int kMaxInner = 50;

struct PathProblem {
  std::vector<Eigen::MatrixXcd> basis;
  Eigen::MatrixXcd x0;
  Eigen::MatrixXd iq;    // slack_j(t) = iq_off(j) - iq.row(j) * t
  Eigen::VectorXd iq_off;
  Eigen::VectorXd cost;
};

struct PathOutcome {
  Eigen::VectorXd t;
  int newton = 0;
  bool converged = false;
  bool early = false;
  bool unbounded = false;
  bool numeric_ok = true;
};

double logdet_psd(const Eigen::LLT<Eigen::MatrixXcd>& llt) {
  double acc = 0.0;
  const auto& l = llt.matrixLLT();
  for (long i = 0; i < l.rows(); ++i) acc += std::log(l(i, i).real());
  return 2.0 * acc;
}

PathOutcome follow_path(const PathProblem& p, Eigen::VectorXd t0, double gap_target,
                        const std::function<bool(double)>& early_stop) {
  const int q = static_cast<int>(p.cost.size());
  const long mi = p.iq_off.size();
  const double nu = static_cast<double>(p.x0.rows()) + static_cast<double>(mi);

  PathOutcome out;
  out.t = std::move(t0);

  auto make_x = [&](const Eigen::VectorXd& tt) {
    Eigen::MatrixXcd x = p.x0;
    for (int i = 0; i < q; ++i) x += tt(i) * p.basis[static_cast<size_t>(i)];
    return x;
  };

  double tau = 1.0;
  std::vector<Eigen::MatrixXcd> w(static_cast<size_t>(q));

  for (int outer = 0; outer < kMaxOuter; ++outer) {
    for (int inner = 0; inner < kMaxInner; ++inner) {
      const Eigen::MatrixXcd x = make_x(out.t);
      Eigen::LLT<Eigen::MatrixXcd> llt(x);
      if (llt.info() != Eigen::Success) {
        out.numeric_ok = false;
        return out;
      }
      const Eigen::VectorXd s = p.iq_off - p.iq * out.t;

      Eigen::VectorXd grad = tau * p.cost;
      for (int i = 0; i < q; ++i) {
        w[static_cast<size_t>(i)] = llt.solve(p.basis[static_cast<size_t>(i)]);
        grad(i) -= w[static_cast<size_t>(i)].trace().real();
      }
      for (long j = 0; j < mi; ++j) grad += p.iq.row(j).transpose() / s(j);

      Eigen::MatrixXd hess(q, q);
      for (int i = 0; i < q; ++i) {
        for (int l = i; l < q; ++l) {
          const double v =
              (w[static_cast<size_t>(i)].array() * w[static_cast<size_t>(l)].transpose().array())
                  .sum()
                  .real();
          hess(i, l) = v;
          hess(l, i) = v;
        }
      }
      for (long j = 0; j < mi; ++j) {
        const Eigen::VectorXd gj = p.iq.row(j).transpose() / s(j);
        hess += gj * gj.transpose();
      }

      // The Hessian is positive definite whenever the basis is linearly
      // independent, but the phase 1 augmentation can make it singular.
      // Eigen's LDLT pseudo-inverts zero pivots, so a singular system still
      // yields a finite candidate that silently drops the null-space part of
      // the step; the backward-error gate below rejects it and escalates to
      // a ridge-damped solve that keeps the full descent direction.
      Eigen::VectorXd dt;
      double decrement = 0.0;
      bool have_direction = false;
      const double grad_norm = grad.cwiseAbs().maxCoeff();
      const double ridge_scale = 1.0 + hess.diagonal().cwiseAbs().maxCoeff();
      for (double ridge : {0.0, 1e-12, 1e-8, 1e-4}) {
        Eigen::MatrixXd damped = hess;
        damped.diagonal().array() += ridge * ridge_scale;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
        if (ldlt.info() != Eigen::Success) continue;
        const Eigen::VectorXd candidate = -ldlt.solve(grad);
        if (!candidate.allFinite()) continue;
        const double residual = (damped * candidate + grad).cwiseAbs().maxCoeff();
        const double scale =
            damped.cwiseAbs().maxCoeff() * candidate.cwiseAbs().maxCoeff() + grad_norm;
        if (residual > 1e-9 * (scale + 1e-30)) continue;
        const double dec = -grad.dot(candidate);
        if (dec < 0.0) continue;
        dt = candidate;
        decrement = dec;
        have_direction = true;
        break;
      }
      if (!have_direction) {
        out.numeric_ok = false;
        return out;
      }
      if (decrement < 1e-12 * (1.0 + tau)) break;

      const double f_cur = tau * p.cost.dot(out.t) - logdet_psd(llt) -
                           (mi ? s.array().log().sum() : 0.0);
      double alpha = 1.0;
      bool accepted = false;
      for (int halving = 0; halving < 60; ++halving, alpha *= 0.5) {
        const Eigen::VectorXd tn = out.t + alpha * dt;
        if (mi) {
          const Eigen::VectorXd sn = p.iq_off - p.iq * tn;
          if (sn.minCoeff() <= 0.0) continue;
        }
        const Eigen::MatrixXcd xn = make_x(tn);
        Eigen::LLT<Eigen::MatrixXcd> lltn(xn);
        if (lltn.info() != Eigen::Success) continue;
        const Eigen::VectorXd sn = p.iq_off - p.iq * tn;
        const double f_new = tau * p.cost.dot(tn) - logdet_psd(lltn) -
                             (mi ? sn.array().log().sum() : 0.0);
        if (f_new <= f_cur - 0.25 * alpha * decrement) {
          out.t = tn;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      ++out.newton;

      const double obj = p.cost.dot(out.t);
      if (early_stop && early_stop(obj)) {
        out.early = true;
        return out;
      }
      if (obj < kObjectiveFloor) {
        out.unbounded = true;
        return out;
      }
    }

    if (nu / tau < gap_target) {
      out.converged = true;
      return out;
    }
    tau *= 5.0;
  }
  return out;
}

SdpSolution infeasible_solution(double residual) {
  SdpSolution sol;
  sol.status = SdpStatus::infeasible;
  sol.eq_residual = residual;
  return sol;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dual certificates
// ---------------------------------------------------------------------------

DualCertificateAbc abc_certificate_from_theta(const AbcProblem& problem, double theta) {
  if (!std::isfinite(theta)) throw argument_error("certificate parameter must be finite");
  DualCertificateAbc cert;
  cert.theta = theta;
  const double profile = 2.0 * f_theta(problem, theta) - 1.0;
  if (profile <= 1.0) {
    cert.c = 1.0;
    return cert;
  }
  const double d = problem.d;
  const SocpCoefficients sc = socp_coeffs(problem);
  const double denom = d + std::cosh(theta);
  const double xs = 2.0 / denom;
  const double ys = xs * std::sinh(theta);
  cert.x = xs / d + ys / (d * sc.k);
  cert.y = xs / d - ys / (d * sc.k);
  cert.z = 2.0 / d;
  const double e = d * d * (1.0 - problem.eps2);
  const double f = d * d * (1.0 - problem.eps1);
  cert.c = 1.0 - d * cert.z + e * cert.x + f * cert.y;
  return cert;
}

DualFeasibilityReport abc_dual_feasibility(const AbcProblem& problem,
                                           const DualCertificateAbc& cert, double tol) {
  if (!(tol >= 0.0)) throw argument_error("feasibility tolerance must be nonnegative");
  const int d = problem.d;

  double violation = std::max(-cert.z, cert.z - 2.0 / d);

  // Extreme eigenvalues of the pencil, by the closed form branches and by a
  // dense solve. The zero eigenspace is always present, so the extremes are
  // clipped against zero. Taking the worse of the two routes makes the audit
  // conservative.
  const MxySpectrum sp = m_xy_spectrum(cert.x, cert.y, d);
  double lam_max = std::max({sp.lambda_plus, sp.lambda_minus, 0.0});
  double lam_min = std::min({sp.lambda_plus, sp.lambda_minus, 0.0});
  const Eigen::VectorXd dense = hermitian_eigenvalues(m_xy(cert.x, cert.y, d));
  lam_max = std::max(lam_max, dense(dense.size() - 1));
  lam_min = std::min(lam_min, dense(0));

  violation = std::max(violation, lam_max - cert.z);
  violation = std::max(violation, cert.z - 2.0 / d - lam_min);

  const double e = static_cast<double>(d) * d * (1.0 - problem.eps2);
  const double f = static_cast<double>(d) * d * (1.0 - problem.eps1);

  DualFeasibilityReport report;
  report.objective = 1.0 - d * cert.z + e * cert.x + f * cert.y;
  report.max_violation = violation;
  report.feasible = violation <= tol;
  return report;
}

OverheadResult abc_dual_theta_search(const AbcProblem& problem, double tol) {
  if (!(tol > 0.0) || tol >= 1.0) throw argument_error("search tolerance must lie in (0, 1)");
  const double center = theta_star(problem);
  const auto profile = [&](double th) { return 2.0 * f_theta(problem, th) - 1.0; };

  double lo = center - 5.0;
  double hi = center + 5.0;
  // The maximiser sits strictly inside the initial bracket; widen a few
  // times anyway in case of extreme rounding near the domain boundary.
  for (int guard = 0; guard < 8; ++guard) {
    if (profile(lo) <= profile(center) && profile(hi) <= profile(center)) break;
    const double width = hi - lo;
    lo -= width;
    hi += width;
  }

  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c1 = b - ratio * (b - a);
  double c2 = a + ratio * (b - a);
  double f1 = profile(c1);
  double f2 = profile(c2);
  int iters = 0;
  while (b - a > tol) {
    if (++iters > 200) {
      throw numeric_error("profile search stalled; best value seen " +
                          std::to_string(std::max(f1, f2)));
    }
    if (f1 < f2) {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + ratio * (b - a);
      f2 = profile(c2);
    } else {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - ratio * (b - a);
      f1 = profile(c1);
    }
  }

  const DualCertificateAbc cert = abc_certificate_from_theta(problem, 0.5 * (a + b));
  OverheadResult out;
  out.value = cert.c;
  out.method = OverheadMethod::theta_search;
  out.certificate = {{"theta", cert.theta}, {"x", cert.x}, {"y", cert.y},
                     {"z", cert.z},         {"c", cert.c}};
  return out;
}

OverheadResult pbc_lp_solve(const PbcProblem& problem) {
  const Rational ratio = s_n_over_p(problem.d, problem.n);
  const double corner_main = problem.p * ratio.to_double();
  const double corner_axis = problem.p;
  const double lam = z_lambda_max(problem.d, problem.n);

  OverheadResult out;
  // The first corner dominates whenever (d - 1)(N - 1) >= 0, i.e. always.
  out.value = std::max(corner_main, corner_axis);
  out.method = OverheadMethod::lp_corner;
  out.certificate = {{"c", 0.0},
                     {"x", -1.0 / (static_cast<double>(problem.d) * problem.n)},
                     {"y", 2.0 / (problem.d * lam)},
                     {"value_1", corner_main},
                     {"value_2", corner_axis}};
  return out;
}

// ---------------------------------------------------------------------------
// Standard form and JSON
// ---------------------------------------------------------------------------

std::string to_json_string(const SdpStandardForm& form, int indent) {
  nlohmann::json j;
  j["dim"] = form.dim;
  j["objective"] = matrix_to_json(form.objective);
  auto dump_side = [](const std::vector<LinearConstraint>& side) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& con : side) {
      arr.push_back(nlohmann::json{{"matrix", matrix_to_json(con.matrix)}, {"rhs", con.rhs}});
    }
    return arr;
  };
  j["equalities"] = dump_side(form.equalities);
  j["inequalities"] = dump_side(form.inequalities);
  return indent >= 0 ? j.dump(indent) : j.dump();
}

SdpStandardForm sdp_from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw argument_error(std::string("invalid program JSON: ") + e.what());
  }
  SdpStandardForm form;
  try {
    form.dim = j.at("dim").get<int>();
    if (form.dim < 1) throw argument_error("program dimension must be positive");
    form.objective = matrix_from_json(j.at("objective"), form.dim);
    auto load_side = [&](const char* key, std::vector<LinearConstraint>& side) {
      for (const auto& entry : j.at(key)) {
        LinearConstraint con;
        con.matrix = matrix_from_json(entry.at("matrix"), form.dim);
        con.rhs = entry.at("rhs").get<double>();
        side.push_back(std::move(con));
      }
    };
    load_side("equalities", form.equalities);
    load_side("inequalities", form.inequalities);
  } catch (const nlohmann::json::exception& e) {
    throw argument_error(std::string("invalid program JSON: ") + e.what());
  }
  return form;
}

// ---------------------------------------------------------------------------
// Program builders
// ---------------------------------------------------------------------------

SdpStandardForm build_abc_primal_sdp(int d, int n, const std::vector<double>& eps) {
  validate_broadcast_sizes(d, n);
  if (static_cast<int>(eps.size()) != n) {
    throw argument_error("one fidelity shortfall per receiver is required");
  }
  const double eps_cap = 1.0 - 1.0 / (static_cast<double>(d) * d) + 1e-15;
  for (double e : eps) {
    if (!(e >= 0.0 && e <= eps_cap)) {
      throw argument_error("fidelity shortfalls must lie in [0, 1 - 1/d^2]");
    }
  }

  const int k = n + 1;
  const int m = integer_power_dim(d, k);
  const int dim = 2 * m + 2;
  const int slot_a = 2 * m;
  const int slot_b = 2 * m + 1;
  const std::vector<int> dims_k(static_cast<size_t>(k), d);

  SdpStandardForm form;
  form.dim = dim;
  form.objective = Eigen::MatrixXcd::Zero(dim, dim);
  form.objective(slot_a, slot_a) = 1.0;
  form.objective(slot_b, slot_b) = 1.0;

  add_structure_constraints(form, {m, m, 1, 1}, d, k);

  // Input marginal of each channel block ties to its scalar slot.
  for (const auto& f : hermitian_matrix_basis(d)) {
    const Eigen::MatrixXcd lift = embed(MultipartiteOperator(f, {d}), {0}, dims_k).entries();
    const double tr = f.trace().real();
    for (int which = 0; which < 2; ++which) {
      Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
      a.block(which * m, which * m, m, m) = lift;
      a(which == 0 ? slot_a : slot_b, which == 0 ? slot_a : slot_b) -= tr;
      form.equalities.push_back({std::move(a), 0.0});
    }
  }

  // Receiver marginals of the difference block must match the depolarizing
  // targets fixed by the shortfalls.
  for (int r = 1; r <= n; ++r) {
    const double p = eps_to_p(d, eps[static_cast<size_t>(r - 1)]);
    const Eigen::MatrixXcd target = depolarizing_choi(d, p).op.entries();
    for (const auto& h : hermitian_matrix_basis(d * d)) {
      const Eigen::MatrixXcd lift = embed(MultipartiteOperator(h, {d, d}), {0, r}, dims_k).entries();
      Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
      a.block(0, 0, m, m) = lift;
      a.block(m, m, m, m) = -lift;
      const double rhs = (h * target).trace().real();
      form.equalities.push_back({std::move(a), rhs});
    }
  }

  // a - b = 1
  Eigen::MatrixXcd defect = Eigen::MatrixXcd::Zero(dim, dim);
  defect(slot_a, slot_a) = 1.0;
  defect(slot_b, slot_b) = -1.0;
  form.equalities.push_back({std::move(defect), 1.0});

  return form;
}

SdpStandardForm build_pbc_primal_sdp(int d, int n, double p) {
  validate_broadcast_sizes(d, n);
  if (!(p > 0.0 && p <= 1.0)) throw argument_error("heralding probability must lie in (0, 1]");

  const int k = n + 1;
  const int m = integer_power_dim(d, k);
  const int dim = 2 * m + 2 + 2 * d + 1;
  const int slot_a = 2 * m;
  const int slot_b = 2 * m + 1;
  const int slack1 = 2 * m + 2;
  const int slack2 = 2 * m + 2 + d;
  const int slot_ab = 2 * m + 2 + 2 * d;
  const std::vector<int> dims_k(static_cast<size_t>(k), d);

  SdpStandardForm form;
  form.dim = dim;
  form.objective = Eigen::MatrixXcd::Zero(dim, dim);
  form.objective(slot_a, slot_a) = 1.0;
  form.objective(slot_b, slot_b) = 1.0;

  add_structure_constraints(form, {m, m, 1, 1, d, d, 1}, d, k);

  // Input marginals are only bounded above here: slack blocks absorb the
  // difference, Tr_outs[J_i] + S_i = (a or b) * identity.
  for (const auto& f : hermitian_matrix_basis(d)) {
    const Eigen::MatrixXcd lift = embed(MultipartiteOperator(f, {d}), {0}, dims_k).entries();
    const double tr = f.trace().real();
    for (int which = 0; which < 2; ++which) {
      Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
      a.block(which * m, which * m, m, m) = lift;
      a.block(which == 0 ? slack1 : slack2, which == 0 ? slack1 : slack2, d, d) = f;
      a(which == 0 ? slot_a : slot_b, which == 0 ? slot_a : slot_b) -= tr;
      form.equalities.push_back({std::move(a), 0.0});
    }
  }

  // Receiver marginals of the difference equal the heralded wire target.
  const Eigen::MatrixXcd target = p * umes(d).entries();
  for (int r = 1; r <= n; ++r) {
    for (const auto& h : hermitian_matrix_basis(d * d)) {
      const Eigen::MatrixXcd lift = embed(MultipartiteOperator(h, {d, d}), {0, r}, dims_k).entries();
      Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
      a.block(0, 0, m, m) = lift;
      a.block(m, m, m, m) = -lift;
      const double rhs = (h * target).trace().real();
      form.equalities.push_back({std::move(a), rhs});
    }
  }

  // a - b <= 1 through a scalar slack slot.
  Eigen::MatrixXcd defect = Eigen::MatrixXcd::Zero(dim, dim);
  defect(slot_a, slot_a) = 1.0;
  defect(slot_b, slot_b) = -1.0;
  defect(slot_ab, slot_ab) = 1.0;
  form.equalities.push_back({std::move(defect), 1.0});

  return form;
}

WitnessChannels extract_witness_channels(const Eigen::MatrixXcd& witness, int d, int n) {
  validate_broadcast_sizes(d, n);
  const int k = n + 1;
  const int m = integer_power_dim(d, k);
  if (witness.rows() != witness.cols() || witness.rows() < 2 * m + 2) {
    throw argument_error("witness does not hold two channel blocks of the requested size");
  }
  const std::vector<int> dims_k(static_cast<size_t>(k), d);

  WitnessChannels out;
  out.a = witness(2 * m, 2 * m).real();
  out.b = witness(2 * m + 1, 2 * m + 1).real();
  const Eigen::MatrixXcd b1 = witness.block(0, 0, m, m);
  const Eigen::MatrixXcd b2 = witness.block(m, m, m, m);
  out.j1 = MultipartiteOperator(0.5 * (b1 + b1.adjoint()), dims_k);
  out.j2 = MultipartiteOperator(0.5 * (b2 + b2.adjoint()), dims_k);
  return out;
}

const char* sdp_status_name(SdpStatus status) {
  switch (status) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::infeasible: return "infeasible";
    case SdpStatus::unbounded: return "unbounded";
    case SdpStatus::numeric_failure: return "numeric_failure";
  }
  return "numeric_failure";
}

// ---------------------------------------------------------------------------
// Barrier solver
// ---------------------------------------------------------------------------

SdpSolution sdp_barrier_solve(const SdpStandardForm& form, double tol) {
  if (form.dim < 1) throw argument_error("program dimension must be positive");
  if (form.dim > 128) throw size_error("solver blocks are capped at dimension 128");
  if (!(tol > 0.0 && tol <= 0.1)) throw argument_error("solver tolerance must lie in (0, 0.1]");
  const int dim = form.dim;
  auto check_matrix = [&](const Eigen::MatrixXcd& m, const char* what) {
    if (m.rows() != dim || m.cols() != dim) {
      throw argument_error(std::string(what) + " does not match the program dimension");
    }
    if (hermitian_defect(m) > 1e-8) {
      throw argument_error(std::string(what) + " must be Hermitian");
    }
  };
  check_matrix(form.objective, "objective");
  for (const auto& con : form.equalities) {
    check_matrix(con.matrix, "equality constraint");
    if (!std::isfinite(con.rhs)) throw argument_error("constraint values must be finite");
  }
  for (const auto& con : form.inequalities) {
    check_matrix(con.matrix, "inequality constraint");
    if (!std::isfinite(con.rhs)) throw argument_error("constraint values must be finite");
  }

  const long n2 = static_cast<long>(dim) * dim;
  const long meq = static_cast<long>(form.equalities.size());
  const long mi = static_cast<long>(form.inequalities.size());

  const Eigen::VectorXd cvec = hvec(form.objective);
  Eigen::MatrixXd eq(meq, n2);
  Eigen::VectorXd beq(meq);
  for (long i = 0; i < meq; ++i) {
    eq.row(i) = hvec(form.equalities[static_cast<size_t>(i)].matrix).transpose();
    beq(i) = form.equalities[static_cast<size_t>(i)].rhs;
  }
  Eigen::MatrixXd gi(mi, n2);
  Eigen::VectorXd hi(mi);
  for (long j = 0; j < mi; ++j) {
    gi.row(j) = hvec(form.inequalities[static_cast<size_t>(j)].matrix).transpose();
    hi(j) = form.inequalities[static_cast<size_t>(j)].rhs;
  }

  // Presolve: any equality touching a single coordinate pins it outright.
  // The cross block zeroing rows of the structured programs all fall in this
  // class, so the expensive stages below only see the diagonal blocks.
  std::vector<char> row_live(static_cast<size_t>(meq), 1);
  std::vector<char> col_free(static_cast<size_t>(n2), 1);
  Eigen::VectorXd pinned = Eigen::VectorXd::Zero(n2);
  bool progress = true;
  while (progress) {
    progress = false;
    for (long i = 0; i < meq; ++i) {
      if (!row_live[static_cast<size_t>(i)]) continue;
      long nz = 0;
      long col = -1;
      for (long j = 0; j < n2; ++j) {
        if (col_free[static_cast<size_t>(j)] && std::abs(eq(i, j)) > 1e-13) {
          ++nz;
          col = j;
          if (nz > 1) break;
        }
      }
      if (nz > 1) continue;
      if (nz == 0) {
        if (std::abs(beq(i)) > 1e-8) return infeasible_solution(std::abs(beq(i)));
        row_live[static_cast<size_t>(i)] = 0;
        progress = true;
        continue;
      }
      const double value = beq(i) / eq(i, col);
      pinned(col) = value;
      col_free[static_cast<size_t>(col)] = 0;
      row_live[static_cast<size_t>(i)] = 0;
      for (long r = 0; r < meq; ++r) {
        if (row_live[static_cast<size_t>(r)] && eq(r, col) != 0.0) beq(r) -= eq(r, col) * value;
      }
      for (long r = 0; r < mi; ++r) {
        if (gi(r, col) != 0.0) hi(r) -= gi(r, col) * value;
      }
      progress = true;
    }
  }

  std::vector<long> free_cols;
  for (long j = 0; j < n2; ++j) {
    if (col_free[static_cast<size_t>(j)]) free_cols.push_back(j);
  }
  std::vector<long> live_rows;
  for (long i = 0; i < meq; ++i) {
    if (row_live[static_cast<size_t>(i)]) live_rows.push_back(i);
  }
  const long nf = static_cast<long>(free_cols.size());
  const long na = static_cast<long>(live_rows.size());

  // Null space of the reduced equalities plus a least squares particular
  // point, both from the eigendecomposition of the normal matrix.
  Eigen::VectorXd part = Eigen::VectorXd::Zero(nf);
  Eigen::MatrixXd null_basis;
  if (na == 0) {
    null_basis = Eigen::MatrixXd::Identity(nf, nf);
  } else {
    Eigen::MatrixXd er(na, nf);
    Eigen::VectorXd br(na);
    for (long i = 0; i < na; ++i) {
      br(i) = beq(live_rows[static_cast<size_t>(i)]);
      for (long j = 0; j < nf; ++j) {
        er(i, j) = eq(live_rows[static_cast<size_t>(i)], free_cols[static_cast<size_t>(j)]);
      }
    }
    const Eigen::MatrixXd normal = er.transpose() * er;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normal);
    if (es.info() != Eigen::Success) {
      SdpSolution sol;
      sol.status = SdpStatus::numeric_failure;
      return sol;
    }
    const double cutoff = 1e-10 * std::max(es.eigenvalues().maxCoeff(), 1e-30);
    const Eigen::VectorXd projected = er.transpose() * br;
    long null_count = 0;
    for (long i = 0; i < nf; ++i) {
      if (es.eigenvalues()(i) > cutoff) {
        part += es.eigenvectors().col(i) * (es.eigenvectors().col(i).dot(projected) /
                                            es.eigenvalues()(i));
      } else {
        ++null_count;
      }
    }
    const double residual = na ? (er * part - br).cwiseAbs().maxCoeff() : 0.0;
    if (residual > 1e-7 * (1.0 + br.cwiseAbs().maxCoeff())) return infeasible_solution(residual);
    null_basis.resize(nf, null_count);
    long put = 0;
    for (long i = 0; i < nf; ++i) {
      if (es.eigenvalues()(i) <= cutoff) null_basis.col(put++) = es.eigenvectors().col(i);
    }
  }
  const long q = null_basis.cols();
  if (q > 300) throw size_error("reduced variable count exceeds the 300 limit");

  // Assemble full coordinate affine map x(t) = base + scatter(null_basis) t.
  Eigen::VectorXd base = pinned;
  for (long j = 0; j < nf; ++j) base(free_cols[static_cast<size_t>(j)]) += part(j);

  PathProblem path;
  path.x0 = hunvec(base, dim);
  path.basis.reserve(static_cast<size_t>(q));
  for (long c = 0; c < q; ++c) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n2);
    for (long j = 0; j < nf; ++j) z(free_cols[static_cast<size_t>(j)]) = null_basis(j, c);
    path.basis.push_back(hunvec(z, dim));
  }
  path.cost.resize(q);
  for (long c = 0; c < q; ++c) {
    double acc = 0.0;
    for (long j = 0; j < nf; ++j) acc += cvec(free_cols[static_cast<size_t>(j)]) * null_basis(j, c);
    path.cost(c) = acc;
  }
  path.iq.resize(mi, q);
  path.iq_off.resize(mi);
  for (long r = 0; r < mi; ++r) {
    double off = hi(r);
    for (long j = 0; j < nf; ++j) off -= gi(r, free_cols[static_cast<size_t>(j)]) * part(j);
    path.iq_off(r) = off;
    for (long c = 0; c < q; ++c) {
      double acc = 0.0;
      for (long j = 0; j < nf; ++j) {
        acc += gi(r, free_cols[static_cast<size_t>(j)]) * null_basis(j, c);
      }
      path.iq(r, c) = acc;
    }
  }

  auto finish = [&](const Eigen::VectorXd& t, SdpStatus status, int newton_steps) {
    SdpSolution sol;
    sol.status = status;
    sol.iterations = newton_steps;
    Eigen::MatrixXcd x = path.x0;
    for (long c = 0; c < q; ++c) x += t(c) * path.basis[static_cast<size_t>(c)];
    sol.witness = x;
    sol.value = (form.objective * x).trace().real();
    double resid = 0.0;
    for (const auto& con : form.equalities) {
      resid = std::max(resid, std::abs((con.matrix * x).trace().real() - con.rhs));
    }
    sol.eq_residual = resid;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(x, Eigen::EigenvaluesOnly);
    sol.min_eigenvalue = es.eigenvalues().minCoeff();
    return sol;
  };

  // Fully pinned program: nothing left to optimise over.
  if (q == 0) {
    const Eigen::VectorXd t0(0);
    SdpSolution sol = finish(t0, SdpStatus::optimal, 0);
    const double slack_min = mi ? path.iq_off.minCoeff() : 0.0;
    if (sol.min_eigenvalue < -1e-8 || (mi && slack_min < -1e-8)) {
      sol.status = SdpStatus::infeasible;
    }
    return sol;
  }

  // Phase 1: find a strictly feasible point, unless the affine base already
  // is one.
  Eigen::VectorXd t_start = Eigen::VectorXd::Zero(q);
  int newton_total = 0;
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(path.x0, Eigen::EigenvaluesOnly);
    const double lam0 = es.eigenvalues().minCoeff();
    const double slack0 = mi ? path.iq_off.minCoeff() : 1.0;
    if (lam0 <= kFeasMargin || slack0 <= kFeasMargin) {
      PathProblem aug;
      aug.basis = path.basis;
      aug.basis.push_back(Eigen::MatrixXcd::Identity(dim, dim));
      aug.x0 = path.x0;
      aug.iq.resize(mi, q + 1);
      if (mi) {
        aug.iq.leftCols(q) = path.iq;
        aug.iq.col(q).setConstant(-1.0);
      }
      aug.iq_off = path.iq_off;
      aug.cost = Eigen::VectorXd::Zero(q + 1);
      aug.cost(q) = 1.0;

      Eigen::VectorXd t1 = Eigen::VectorXd::Zero(q + 1);
      t1(q) = std::max({0.0, -lam0, mi ? -path.iq_off.minCoeff() : 0.0}) + 1.0;

      const PathOutcome phase1 = follow_path(
          aug, t1, 0.25 * kFeasMargin, [&](double r) { return r < -2.0 * kFeasMargin; });
      newton_total += phase1.newton;
      if (!phase1.numeric_ok) {
        SdpSolution sol = finish(phase1.t.head(q), SdpStatus::numeric_failure, newton_total);
        return sol;
      }
      if (!phase1.early && !phase1.unbounded) {
        // No point with the required margin exists inside the affine space.
        SdpSolution sol = finish(phase1.t.head(q), SdpStatus::infeasible, newton_total);
        return sol;
      }
      t_start = phase1.t.head(q);
    }
  }

  const PathOutcome phase2 = follow_path(path, t_start, 0.4 * tol, nullptr);
  newton_total += phase2.newton;
  SdpStatus status = SdpStatus::optimal;
  if (!phase2.numeric_ok) {
    status = SdpStatus::numeric_failure;
  } else if (phase2.unbounded) {
    status = SdpStatus::unbounded;
  } else if (!phase2.converged) {
    status = SdpStatus::numeric_failure;
  }
  return finish(phase2.t, status, newton_total);
}

}  // namespace vbcast
