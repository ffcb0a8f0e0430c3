#include "vbcast/operators.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <utility>

#include <json.hpp>

#include "vbcast/errors.hpp"

namespace vbcast {

namespace {

long product_of(const std::vector<int>& dims) {
  long p = 1;
  for (int d : dims) p *= d;
  return p;
}

// Row strides of a big-endian multi-index over dims (system 0 is the most
// significant digit).
std::vector<long> strides_of(const std::vector<int>& dims) {
  std::vector<long> strides(dims.size(), 1);
  for (int j = static_cast<int>(dims.size()) - 2; j >= 0; --j) {
    strides[j] = strides[j + 1] * dims[j + 1];
  }
  return strides;
}

// Flat-index offsets contributed by the digit group at the given positions.
// Entry t is the full-space offset of the t-th multi-index over
// dims[positions...], enumerated big-endian in positions order. Splitting a
// flat index into independent digit groups this way lets every reshaping
// operation below be written as plain offset sums.
std::vector<long> group_offsets(const std::vector<int>& dims, const std::vector<int>& positions) {
  const std::vector<long> strides = strides_of(dims);
  long count = 1;
  for (int p : positions) count *= dims[p];
  std::vector<long> offsets(static_cast<size_t>(count), 0);
  std::vector<int> digit(positions.size(), 0);
  for (long t = 0; t < count; ++t) {
    long off = 0;
    for (size_t j = 0; j < positions.size(); ++j) off += digit[j] * strides[positions[j]];
    offsets[static_cast<size_t>(t)] = off;
    for (int j = static_cast<int>(positions.size()) - 1; j >= 0; --j) {
      if (++digit[j] < dims[positions[j]]) break;
      digit[j] = 0;
    }
  }
  return offsets;
}

void validate_systems(const MultipartiteOperator& op, const std::vector<int>& systems,
                      const char* what) {
  std::unordered_set<int> seen;
  for (int s : systems) {
    if (s < 0 || s >= op.num_systems()) {
      throw argument_error(std::string(what) + ": system index out of range");
    }
    if (!seen.insert(s).second) {
      throw argument_error(std::string(what) + ": duplicate system index");
    }
  }
}

std::vector<int> complement_of(int n, const std::vector<int>& systems) {
  std::vector<bool> marked(static_cast<size_t>(n), false);
  for (int s : systems) marked[static_cast<size_t>(s)] = true;
  std::vector<int> rest;
  for (int j = 0; j < n; ++j) {
    if (!marked[static_cast<size_t>(j)]) rest.push_back(j);
  }
  return rest;
}

template <typename T>
std::vector<T> select(const std::vector<T>& values, const std::vector<int>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(values[static_cast<size_t>(i)]);
  return out;
}

std::vector<std::string> merged_labels(const MultipartiteOperator& a,
                                       const MultipartiteOperator& b) {
  if (!a.has_labels() || !b.has_labels()) return {};
  std::vector<std::string> all = a.labels();
  all.insert(all.end(), b.labels().begin(), b.labels().end());
  std::unordered_set<std::string> seen;
  for (const auto& l : all) {
    if (!seen.insert(l).second) return {};
  }
  return all;
}

}  // namespace

MultipartiteOperator::MultipartiteOperator(Eigen::MatrixXcd entries, std::vector<int> dims,
                                           std::vector<std::string> labels)
    : entries_(std::move(entries)), dims_(std::move(dims)), labels_(std::move(labels)) {
  for (int d : dims_) {
    if (d < 1) throw argument_error("system dimensions must be at least 1");
  }
  const long total = product_of(dims_);
  if (total > config::max_dim()) {
    std::ostringstream msg;
    msg << "total dimension " << total << " exceeds max_dim " << config::max_dim();
    throw size_error(msg.str());
  }
  if (entries_.rows() != entries_.cols() || entries_.rows() != total) {
    throw size_error("matrix shape does not match the product of system dimensions");
  }
  if (!labels_.empty()) {
    if (labels_.size() != dims_.size()) {
      throw argument_error("labels must be empty or match the number of systems");
    }
    std::unordered_set<std::string> seen;
    for (const auto& l : labels_) {
      if (l.empty() || !seen.insert(l).second) {
        throw argument_error("labels must be nonempty and unique");
      }
    }
  }
}

MultipartiteOperator MultipartiteOperator::zero(const std::vector<int>& dims,
                                                std::vector<std::string> labels) {
  const long total = product_of(dims);
  return MultipartiteOperator(Eigen::MatrixXcd::Zero(total, total), dims, std::move(labels));
}

MultipartiteOperator MultipartiteOperator::identity(const std::vector<int>& dims,
                                                    std::vector<std::string> labels) {
  const long total = product_of(dims);
  return MultipartiteOperator(Eigen::MatrixXcd::Identity(total, total), dims,
                              std::move(labels));
}

int MultipartiteOperator::label_index(const std::string& label) const {
  for (size_t j = 0; j < labels_.size(); ++j) {
    if (labels_[j] == label) return static_cast<int>(j);
  }
  throw argument_error("no system labelled '" + label + "'");
}

MultipartiteOperator MultipartiteOperator::with_labels(std::vector<std::string> labels) const {
  return MultipartiteOperator(entries_, dims_, std::move(labels));
}

double MultipartiteOperator::hermitian_deviation() const {
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
}

bool MultipartiteOperator::is_hermitian(double tol) const {
  return hermitian_deviation() <= tol;
}

MultipartiteOperator umes(int d) {
  if (d < 2) throw argument_error("umes requires dimension at least 2");
  Eigen::MatrixXcd gamma = Eigen::MatrixXcd::Zero(static_cast<long>(d) * d,
                                                  static_cast<long>(d) * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      gamma(static_cast<long>(i) * d + i, static_cast<long>(j) * d + j) = 1.0;
    }
  }
  return MultipartiteOperator(std::move(gamma), {d, d});
}

MultipartiteOperator mes(int d) { return (1.0 / d) * umes(d); }

MultipartiteOperator kron(const MultipartiteOperator& a, const MultipartiteOperator& b) {
  const long da = a.total_dim();
  const long db = b.total_dim();
  Eigen::MatrixXcd out(da * db, da * db);
  for (long i = 0; i < da; ++i) {
    for (long j = 0; j < da; ++j) {
      out.block(i * db, j * db, db, db) = a.entries()(i, j) * b.entries();
    }
  }
  std::vector<int> dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return MultipartiteOperator(std::move(out), std::move(dims), merged_labels(a, b));
}

MultipartiteOperator partial_trace(const MultipartiteOperator& op,
                                   const std::vector<int>& systems) {
  validate_systems(op, systems, "partial_trace");
  const std::vector<int> kept = complement_of(op.num_systems(), systems);
  const std::vector<long> off_keep = group_offsets(op.dims(), kept);
  const std::vector<long> off_tr = group_offsets(op.dims(), systems);
  const long dk = static_cast<long>(off_keep.size());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dk, dk);
  for (long r = 0; r < dk; ++r) {
    for (long c = 0; c < dk; ++c) {
      std::complex<double> acc = 0.0;
      for (long t : off_tr) acc += op.entries()(off_keep[r] + t, off_keep[c] + t);
      out(r, c) = acc;
    }
  }
  return MultipartiteOperator(std::move(out), select(op.dims(), kept),
                              op.has_labels() ? select(op.labels(), kept)
                                              : std::vector<std::string>{});
}

MultipartiteOperator partial_transpose(const MultipartiteOperator& op,
                                       const std::vector<int>& systems) {
  validate_systems(op, systems, "partial_transpose");
  const std::vector<int> rest = complement_of(op.num_systems(), systems);
  const std::vector<long> off_s = group_offsets(op.dims(), systems);
  const std::vector<long> off_r = group_offsets(op.dims(), rest);
  const long ns = static_cast<long>(off_s.size());
  const long nr = static_cast<long>(off_r.size());
  Eigen::MatrixXcd out(op.total_dim(), op.total_dim());
  for (long is = 0; is < ns; ++is) {
    for (long js = 0; js < ns; ++js) {
      for (long ir = 0; ir < nr; ++ir) {
        for (long jr = 0; jr < nr; ++jr) {
          out(off_s[is] + off_r[ir], off_s[js] + off_r[jr]) =
              op.entries()(off_s[js] + off_r[ir], off_s[is] + off_r[jr]);
        }
      }
    }
  }
  return MultipartiteOperator(std::move(out), op.dims(), op.labels());
}

MultipartiteOperator reorder(const MultipartiteOperator& op, const std::vector<int>& order) {
  if (static_cast<int>(order.size()) != op.num_systems()) {
    throw argument_error("reorder: order must list every system exactly once");
  }
  validate_systems(op, order, "reorder");
  const std::vector<long> map = group_offsets(op.dims(), order);
  const long total = op.total_dim();
  Eigen::MatrixXcd out(total, total);
  for (long r = 0; r < total; ++r) {
    for (long c = 0; c < total; ++c) out(r, c) = op.entries()(map[r], map[c]);
  }
  return MultipartiteOperator(std::move(out), select(op.dims(), order),
                              op.has_labels() ? select(op.labels(), order)
                                              : std::vector<std::string>{});
}

MultipartiteOperator embed(const MultipartiteOperator& op, const std::vector<int>& positions,
                           const std::vector<int>& full_dims,
                           std::vector<std::string> full_labels) {
  if (static_cast<int>(positions.size()) != op.num_systems()) {
    throw argument_error("embed: one position per system of op is required");
  }
  std::unordered_set<int> seen;
  for (size_t j = 0; j < positions.size(); ++j) {
    const int p = positions[j];
    if (p < 0 || p >= static_cast<int>(full_dims.size())) {
      throw argument_error("embed: position out of range");
    }
    if (!seen.insert(p).second) throw argument_error("embed: duplicate position");
    if (full_dims[static_cast<size_t>(p)] != op.dims()[j]) {
      throw argument_error("embed: full_dims disagrees with op dimensions");
    }
  }
  const std::vector<int> rest = complement_of(static_cast<int>(full_dims.size()), positions);
  const std::vector<long> off_p = group_offsets(full_dims, positions);
  const std::vector<long> off_r = group_offsets(full_dims, rest);
  const long np = static_cast<long>(off_p.size());
  const long total = product_of(full_dims);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(total, total);
  for (long ip = 0; ip < np; ++ip) {
    for (long jp = 0; jp < np; ++jp) {
      const std::complex<double> v = op.entries()(ip, jp);
      if (v == std::complex<double>(0.0, 0.0)) continue;
      for (long r : off_r) out(off_p[ip] + r, off_p[jp] + r) = v;
    }
  }
  return MultipartiteOperator(std::move(out), full_dims, std::move(full_labels));
}

MultipartiteOperator link_product(const MultipartiteOperator& m, const MultipartiteOperator& n,
                                  const std::vector<std::string>& shared) {
  if (!m.has_labels() || !n.has_labels()) {
    throw argument_error("link_product requires labelled operands");
  }
  std::vector<int> pm, pn;
  pm.reserve(shared.size());
  pn.reserve(shared.size());
  std::unordered_set<std::string> shared_set;
  for (const auto& label : shared) {
    if (!shared_set.insert(label).second) {
      throw argument_error("link_product: duplicate shared label '" + label + "'");
    }
    const int im = m.label_index(label);
    const int in = n.label_index(label);
    if (m.dims()[static_cast<size_t>(im)] != n.dims()[static_cast<size_t>(in)]) {
      throw argument_error("link_product: shared system '" + label +
                           "' has mismatched dimensions");
    }
    pm.push_back(im);
    pn.push_back(in);
  }
  // Any label common to both operands must be contracted, otherwise the
  // result would carry a duplicate label with no meaning.
  for (const auto& label : m.labels()) {
    if (shared_set.count(label)) continue;
    for (const auto& other : n.labels()) {
      if (label == other) {
        throw argument_error("link_product: label '" + label +
                             "' appears in both operands but is not shared");
      }
    }
  }

  const std::vector<int> km = complement_of(m.num_systems(), pm);
  const std::vector<int> kn = complement_of(n.num_systems(), pn);
  const std::vector<long> off_m_keep = group_offsets(m.dims(), km);
  const std::vector<long> off_m_sh = group_offsets(m.dims(), pm);
  const std::vector<long> off_n_keep = group_offsets(n.dims(), kn);
  const std::vector<long> off_n_sh = group_offsets(n.dims(), pn);
  const long dkm = static_cast<long>(off_m_keep.size());
  const long dkn = static_cast<long>(off_n_keep.size());
  const long ds = static_cast<long>(off_m_sh.size());

  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dkm * dkn, dkm * dkn);
  for (long a = 0; a < dkm; ++a) {
    for (long a2 = 0; a2 < dkm; ++a2) {
      for (long s = 0; s < ds; ++s) {
        for (long s2 = 0; s2 < ds; ++s2) {
          const std::complex<double> mv =
              m.entries()(off_m_keep[a] + off_m_sh[s], off_m_keep[a2] + off_m_sh[s2]);
          if (mv == std::complex<double>(0.0, 0.0)) continue;
          for (long b = 0; b < dkn; ++b) {
            for (long b2 = 0; b2 < dkn; ++b2) {
              out(a * dkn + b, a2 * dkn + b2) +=
                  mv * n.entries()(off_n_sh[s] + off_n_keep[b], off_n_sh[s2] + off_n_keep[b2]);
            }
          }
        }
      }
    }
  }

  std::vector<int> dims = select(m.dims(), km);
  const std::vector<int> dims_n = select(n.dims(), kn);
  dims.insert(dims.end(), dims_n.begin(), dims_n.end());
  std::vector<std::string> labels = select(m.labels(), km);
  const std::vector<std::string> labels_n = select(n.labels(), kn);
  labels.insert(labels.end(), labels_n.begin(), labels_n.end());
  return MultipartiteOperator(std::move(out), std::move(dims), std::move(labels));
}

namespace {

void require_same_shape(const MultipartiteOperator& a, const MultipartiteOperator& b,
                        const char* what) {
  if (a.dims() != b.dims()) {
    throw argument_error(std::string(what) + ": operands have different system dimensions");
  }
}

std::vector<std::string> combined_labels(const MultipartiteOperator& a,
                                         const MultipartiteOperator& b) {
  if (a.has_labels() && b.has_labels() && a.labels() != b.labels()) return {};
  return a.has_labels() ? a.labels() : b.labels();
}

}  // namespace

MultipartiteOperator operator+(const MultipartiteOperator& a, const MultipartiteOperator& b) {
  require_same_shape(a, b, "operator+");
  return MultipartiteOperator(a.entries() + b.entries(), a.dims(), combined_labels(a, b));
}

MultipartiteOperator operator-(const MultipartiteOperator& a, const MultipartiteOperator& b) {
  require_same_shape(a, b, "operator-");
  return MultipartiteOperator(a.entries() - b.entries(), a.dims(), combined_labels(a, b));
}

MultipartiteOperator operator*(std::complex<double> scale, const MultipartiteOperator& op) {
  return MultipartiteOperator(scale * op.entries(), op.dims(), op.labels());
}

MultipartiteOperator operator*(double scale, const MultipartiteOperator& op) {
  return operator*(std::complex<double>(scale, 0.0), op);
}

std::complex<double> trace(const MultipartiteOperator& op) { return op.entries().trace(); }

Eigen::VectorXd hermitian_eigenvalues(const MultipartiteOperator& op, double tol) {
  if (!op.is_hermitian(tol)) {
    std::ostringstream msg;
    msg << "hermitian_eigenvalues: deviation " << op.hermitian_deviation()
        << " exceeds tolerance " << tol;
    throw argument_error(msg.str());
  }
  const Eigen::MatrixXcd sym = 0.5 * (op.entries() + op.entries().adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw numeric_error("hermitian_eigenvalues: eigensolver failed to converge");
  }
  return solver.eigenvalues();
}

bool is_positive_semidefinite(const MultipartiteOperator& op, double tol) {
  const Eigen::VectorXd evals = hermitian_eigenvalues(op);
  return evals(0) >= -tol;
}

std::string to_json_string(const MultipartiteOperator& op, int indent) {
  nlohmann::json j;
  j["dims"] = op.dims();
  const long total = op.total_dim();
  std::vector<std::vector<double>> re(static_cast<size_t>(total),
                                      std::vector<double>(static_cast<size_t>(total)));
  std::vector<std::vector<double>> im = re;
  for (long r = 0; r < total; ++r) {
    for (long c = 0; c < total; ++c) {
      re[static_cast<size_t>(r)][static_cast<size_t>(c)] = op.entries()(r, c).real();
      im[static_cast<size_t>(r)][static_cast<size_t>(c)] = op.entries()(r, c).imag();
    }
  }
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  return j.dump(indent);
}

MultipartiteOperator operator_from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw argument_error(std::string("operator JSON parse failure: ") + e.what());
  }
  if (!j.is_object() || !j.contains("dims") || !j.contains("re") || !j.contains("im")) {
    throw argument_error("operator JSON must contain dims, re, and im");
  }
  std::vector<int> dims;
  try {
    dims = j.at("dims").get<std::vector<int>>();
  } catch (const nlohmann::json::exception&) {
    throw argument_error("operator JSON: dims must be an integer array");
  }
  const long total = product_of(dims);
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (!re.is_array() || !im.is_array() || static_cast<long>(re.size()) != total ||
      static_cast<long>(im.size()) != total) {
    throw argument_error("operator JSON: re and im must be square arrays matching dims");
  }
  Eigen::MatrixXcd entries(total, total);
  for (long r = 0; r < total; ++r) {
    const auto& rr = re.at(static_cast<size_t>(r));
    const auto& ri = im.at(static_cast<size_t>(r));
    if (!rr.is_array() || !ri.is_array() || static_cast<long>(rr.size()) != total ||
        static_cast<long>(ri.size()) != total) {
      throw argument_error("operator JSON: re and im must be square arrays matching dims");
    }
    for (long c = 0; c < total; ++c) {
      double x, y;
      try {
        x = rr.at(static_cast<size_t>(c)).get<double>();
        y = ri.at(static_cast<size_t>(c)).get<double>();
      } catch (const nlohmann::json::exception&) {
        throw argument_error("operator JSON: matrix entries must be numbers");
      }
      entries(r, c) = std::complex<double>(x, y);
    }
  }
  return MultipartiteOperator(std::move(entries), std::move(dims));
}

}  // namespace vbcast
