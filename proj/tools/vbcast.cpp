// vbcast: command line front end for the broadcast overhead library.
//
// Subcommands:
//   overhead   scalar overhead for one problem, optionally cross checked
//   region     CSV sweep of overhead, estimation rate, and efficiency flag
//   min-n      smallest receiver count at which heralding pays off, per d
//   verify     run a named verification suite and emit a JSON report
//   sample     run a sampling experiment described by a JSON config file
//
// Exit codes: 0 success, 1 verification failure, 2 usage error, 3 numeric
// failure. VBCAST_MAX_DIM overrides the library's operator size limit.

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vbcast/analytic.hpp"
#include "vbcast/config.hpp"
#include "vbcast/errors.hpp"
#include "vbcast/optimizer.hpp"
#include "vbcast/sampling.hpp"
#include "vbcast/verification.hpp"

namespace {

using namespace vbcast;

// Largest block diagonal operator the barrier solver accepts; mirrors the
// cap documented on sdp_barrier_solve.
constexpr long kSolverPsdCap = 128;

// Locale independent formatting with 12 significant digits, the precision
// the CSV contract fixes. Shorter representations win when exact, so 1.4
// prints as "1.4" and 5/3 as "1.66666666667".
std::string format_double(double value, int precision = 12) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, precision);
  return std::string(buf, res.ptr);
}

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  int steps = 0;
};

GridSpec parse_grid(const std::string& text) {
  GridSpec out;
  const size_t c1 = text.find(':');
  const size_t c2 = text.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos ||
      text.find(':', c2 + 1) != std::string::npos) {
    throw argument_error("grid: expected lo:hi:steps, got '" + text + "'");
  }
  try {
    size_t used = 0;
    out.lo = std::stod(text.substr(0, c1), &used);
    if (used != c1) throw std::invalid_argument("lo");
    const std::string mid = text.substr(c1 + 1, c2 - c1 - 1);
    out.hi = std::stod(mid, &used);
    if (used != mid.size()) throw std::invalid_argument("hi");
    const std::string tail = text.substr(c2 + 1);
    out.steps = std::stoi(tail, &used);
    if (used != tail.size()) throw std::invalid_argument("steps");
  } catch (const std::exception&) {
    throw argument_error("grid: expected lo:hi:steps, got '" + text + "'");
  }
  if (!(out.lo <= out.hi)) throw argument_error("grid: lo must not exceed hi");
  if (out.steps < 1) throw argument_error("grid: steps must be at least 1");
  return out;
}

double grid_point(const GridSpec& grid, int index) {
  if (grid.steps == 1) return grid.lo;
  return grid.lo + (grid.hi - grid.lo) * index / (grid.steps - 1);
}

// Runs fn(0..count-1) on a small worker pool. Cells are pure and land in
// caller owned slots, so the output order never depends on scheduling. The
// first exception wins and is rethrown on the calling thread.
template <typename Fn>
void parallel_cells(int count, Fn&& fn) {
  const unsigned hw = std::thread::hardware_concurrency();
  const int workers = std::min({count, int(hw == 0 ? 1 : hw), 8});
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& worker : pool) worker.join();
  if (first_error) std::rethrow_exception(first_error);
}

long padded_sdp_dim(int d, int n, bool heralded) {
  long m = 1;
  for (int i = 0; i <= n; ++i) {
    m *= d;
    if (m > (1L << 30)) return m;
  }
  // Layouts from the SDP builders: [J1, J2, a, b] and, with heralding, the
  // extra slack blocks [S1, S2, s_ab].
  return heralded ? 2 * m + 2 * d + 3 : 2 * m + 2;
}

// ---------------------------------------------------------------------------
// overhead
// ---------------------------------------------------------------------------

struct OverheadOptions {
  std::string kind;
  int d = 2;
  int n = 2;
  double p = 1.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  bool verify = false;
  bool json = false;
  double tol = 1e-5;
};

struct OracleValue {
  std::string method;
  double value = 0.0;
  bool solved = true;
  std::string note;
};

int run_overhead(const OverheadOptions& options) {
  double value = 0.0;
  OverheadMethod method = OverheadMethod::closed_form;
  std::vector<OracleValue> oracles;

  if (options.kind == "pbc") {
    const PbcProblem problem(options.d, options.n, options.p);
    value = s_n_closed(problem.d, problem.n, problem.p);
    if (options.verify) {
      oracles.push_back({"lp_corner", pbc_lp_solve(problem).value, true, ""});
      if (padded_sdp_dim(problem.d, problem.n, true) <= kSolverPsdCap) {
        const SdpSolution sol =
            sdp_barrier_solve(build_pbc_primal_sdp(problem.d, problem.n, problem.p));
        oracles.push_back({"sdp_oracle", sol.value, sol.status == SdpStatus::optimal,
                           sol.status == SdpStatus::optimal ? "" : sdp_status_name(sol.status)});
      }
    }
  } else {
    const double e1 = options.kind == "exact" ? 0.0 : options.eps1;
    const double e2 = options.kind == "exact" ? 0.0 : options.eps2;
    if (options.n == 2) {
      const AbcProblem problem(options.d, e1, e2);
      value = options.kind == "exact" ? v2_exact(options.d) : u2_closed(problem);
      if (options.verify) {
        oracles.push_back({"closed_form_alternate", u2_closed_alternate(problem), true, ""});
        oracles.push_back(
            {"theta_search", abc_dual_theta_search(problem).value, true, ""});
        if (padded_sdp_dim(problem.d, 2, false) <= kSolverPsdCap) {
          const SdpSolution sol =
              sdp_barrier_solve(build_abc_primal_sdp(problem.d, 2, {e1, e2}));
          oracles.push_back({"sdp_oracle", sol.value, sol.status == SdpStatus::optimal,
                             sol.status == SdpStatus::optimal ? "" : sdp_status_name(sol.status)});
        }
      }
    } else {
      // More than two receivers has no closed form here; the barrier solver
      // is the primary route and there is nothing independent to check it
      // against, so --verify is rejected rather than silently passed.
      if (options.kind == "exact") {
        throw argument_error("overhead: kind exact is the two receiver noiseless value; "
                             "use --n 2 or kind abc");
      }
      if (options.verify) {
        throw argument_error("overhead: --verify needs an independent oracle and none exists "
                             "beyond two receivers");
      }
      if (e1 != e2) {
        throw argument_error("overhead: beyond two receivers the targets are uniform; "
                             "set --eps instead of distinct --eps1/--eps2");
      }
      if (padded_sdp_dim(options.d, options.n, false) > kSolverPsdCap) {
        throw argument_error("overhead: d = " + std::to_string(options.d) + ", n = " +
                             std::to_string(options.n) + " exceeds the barrier solver size cap");
      }
      const std::vector<double> eps(static_cast<size_t>(options.n), e1);
      const SdpSolution sol = sdp_barrier_solve(build_abc_primal_sdp(options.d, options.n, eps));
      if (sol.status != SdpStatus::optimal) {
        throw numeric_error(std::string("overhead: barrier solve ended with status ") +
                            sdp_status_name(sol.status));
      }
      value = sol.value;
      method = OverheadMethod::sdp_oracle;
    }
  }

  double max_deviation = 0.0;
  bool all_solved = true;
  for (const auto& oracle : oracles) {
    max_deviation = std::max(max_deviation, std::abs(oracle.value - value));
    all_solved = all_solved && oracle.solved;
  }
  const bool verified = !options.verify || (all_solved && max_deviation <= options.tol);

  if (options.json) {
    nlohmann::json j;
    j["kind"] = options.kind;
    j["d"] = options.d;
    if (options.kind == "pbc") {
      j["n"] = options.n;
      j["p"] = options.p;
    } else if (options.kind == "abc") {
      j["n"] = options.n;
      j["eps1"] = options.eps1;
      j["eps2"] = options.eps2;
    }
    j["value"] = value;
    j["method"] = overhead_method_name(method);
    if (options.verify) {
      nlohmann::json checks = nlohmann::json::array();
      for (const auto& oracle : oracles) {
        nlohmann::json entry;
        entry["method"] = oracle.method;
        entry["value"] = oracle.value;
        entry["deviation"] = std::abs(oracle.value - value);
        if (!oracle.note.empty()) entry["status"] = oracle.note;
        checks.push_back(std::move(entry));
      }
      j["oracles"] = std::move(checks);
      j["max_deviation"] = max_deviation;
      j["tolerance"] = options.tol;
      j["verified"] = verified;
    }
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    std::printf("%s\n", format_double(value).c_str());
    std::printf("method: %s\n", overhead_method_name(method));
    if (options.verify) {
      for (const auto& oracle : oracles) {
        if (oracle.solved) {
          std::printf("oracle %s: %s (deviation %s)\n", oracle.method.c_str(),
                      format_double(oracle.value).c_str(),
                      format_double(std::abs(oracle.value - value), 3).c_str());
        } else {
          std::printf("oracle %s: solver status %s\n", oracle.method.c_str(),
                      oracle.note.c_str());
        }
      }
      std::printf("max deviation %s %s tolerance %s\n",
                  format_double(max_deviation, 3).c_str(),
                  verified ? "within" : "exceeds", format_double(options.tol, 3).c_str());
    }
  }
  return verified ? 0 : 1;
}

// ---------------------------------------------------------------------------
// region
// ---------------------------------------------------------------------------

struct RegionOptions {
  std::string kind;
  int d = 2;
  int n = 2;
  std::string grid_text;
  bool json = false;
  double tol = 1e-6;
};

struct RegionRow {
  std::vector<double> values;
};

int run_region(const RegionOptions& options) {
  const GridSpec grid = parse_grid(options.grid_text);
  std::vector<std::string> columns;
  std::vector<RegionRow> rows;

  if (options.kind == "abc") {
    if (options.n < 2) throw argument_error("region: n must be at least 2");
    columns = {"eps1", "eps2", "overhead", "rate", "se"};
    if (options.n == 2) {
      // Closed form cells over the (eps1, eps2) square, row major.
      const int count = grid.steps * grid.steps;
      rows.resize(static_cast<size_t>(count));
      parallel_cells(count, [&](int cell) {
        const double e1 = grid_point(grid, cell / grid.steps);
        const double e2 = grid_point(grid, cell % grid.steps);
        const RateSummary summary = se_abc(options.d, {e1, e2});
        rows[static_cast<size_t>(cell)].values = {e1, e2, summary.overhead, summary.rate,
                                                  summary.sample_efficient ? 1.0 : 0.0};
      });
    } else {
      // Beyond two receivers only the barrier solver knows the overhead, so
      // the grid is the uniform eps axis and every cell is one solve.
      if (padded_sdp_dim(options.d, options.n, false) > kSolverPsdCap) {
        throw argument_error("region: d = " + std::to_string(options.d) + ", n = " +
                             std::to_string(options.n) + " exceeds the barrier solver size cap");
      }
      rows.resize(static_cast<size_t>(grid.steps));
      parallel_cells(grid.steps, [&](int cell) {
        const double eps = grid_point(grid, cell);
        const std::vector<double> eps_vec(static_cast<size_t>(options.n), eps);
        const SdpSolution sol =
            sdp_barrier_solve(build_abc_primal_sdp(options.d, options.n, eps_vec), options.tol);
        if (sol.status != SdpStatus::optimal) {
          throw numeric_error(std::string("region: barrier solve at eps = ") +
                              format_double(eps) + " ended with status " +
                              sdp_status_name(sol.status));
        }
        const RateSummary summary = se_abc(options.d, eps_vec, sol.value);
        rows[static_cast<size_t>(cell)].values = {eps, eps, summary.overhead, summary.rate,
                                                  summary.sample_efficient ? 1.0 : 0.0};
      });
    }
  } else {
    // Heralded sweep over p at fixed d and receiver count.
    columns = {"p", "overhead", "nprob", "se"};
    rows.resize(static_cast<size_t>(grid.steps));
    parallel_cells(grid.steps, [&](int cell) {
      const double p = grid_point(grid, cell);
      const PbcProblem problem(options.d, options.n, p);
      rows[static_cast<size_t>(cell)].values = {p, s_n_closed(options.d, options.n, p),
                                                n_prob(problem), se_pbc(problem) ? 1.0 : 0.0};
    });
  }

  if (options.json) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json entry;
      for (size_t c = 0; c + 1 < columns.size(); ++c) entry[columns[c]] = row.values[c];
      entry["se"] = row.values.back() != 0.0;
      out.push_back(std::move(entry));
    }
    std::printf("%s\n", out.dump(2).c_str());
    return 0;
  }

  std::string text = "# vbcast-region v1\n";
  for (size_t c = 0; c < columns.size(); ++c) {
    text += columns[c];
    text += (c + 1 < columns.size()) ? ',' : '\n';
  }
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.values.size(); ++c) {
      text += format_double(row.values[c]);
      text += (c + 1 < row.values.size()) ? ',' : '\n';
    }
  }
  std::fputs(text.c_str(), stdout);
  return 0;
}

// ---------------------------------------------------------------------------
// min-n
// ---------------------------------------------------------------------------

struct MinNOptions {
  std::string d_range = "2";
  double p = 1.0;
  bool json = false;
};

int run_min_n(const MinNOptions& options) {
  if (!(options.p > 0.0) || options.p > 1.0) {
    throw argument_error("min-n: p must lie in (0, 1]");
  }
  int d_lo = 0;
  int d_hi = 0;
  try {
    size_t used = 0;
    const size_t colon = options.d_range.find(':');
    if (colon == std::string::npos) {
      d_lo = d_hi = std::stoi(options.d_range, &used);
      if (used != options.d_range.size()) throw std::invalid_argument("d");
    } else {
      const std::string head = options.d_range.substr(0, colon);
      const std::string tail = options.d_range.substr(colon + 1);
      d_lo = std::stoi(head, &used);
      if (used != head.size()) throw std::invalid_argument("d");
      d_hi = std::stoi(tail, &used);
      if (used != tail.size()) throw std::invalid_argument("d");
    }
  } catch (const std::exception&) {
    throw argument_error("min-n: --d expects an integer or an inclusive range lo:hi");
  }
  if (d_lo < 2 || d_hi < d_lo) {
    throw argument_error("min-n: dimension range must satisfy 2 <= lo <= hi");
  }

  nlohmann::json out = nlohmann::json::array();
  for (int d = d_lo; d <= d_hi; ++d) {
    const MinReceiversResult result = min_n_for_se(d, options.p);
    if (options.json) {
      nlohmann::json entry;
      entry["d"] = d;
      entry["found"] = result.found;
      if (result.found) entry["n"] = result.n;
      entry["exceeded_search_cap"] = result.exceeded_search_cap;
      out.push_back(std::move(entry));
    } else if (result.found) {
      std::printf("%d %d\n", d, result.n);
    } else {
      std::printf("%d none\n", d);
    }
  }
  if (options.json) std::printf("%s\n", out.dump(2).c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// verify and sample
// ---------------------------------------------------------------------------

struct VerifyOptions {
  std::string suite;
  std::uint64_t seed = 0;
};

int run_verify(const VerifyOptions& options) {
  const SuiteResult result = run_suite(options.suite, options.seed);
  std::printf("%s\n", to_json_string(result, 2).c_str());
  return result.passed() ? 0 : 1;
}

struct SampleOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

int run_sample(const SampleOptions& options) {
  std::ifstream in(options.config_path, std::ios::binary);
  if (!in) {
    throw argument_error("sample: cannot read config file '" + options.config_path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();

  ExperimentConfig config = config_from_json_string(buffer.str());
  if (options.seed_given) config.seed = options.seed;
  const ExperimentReport report = simulate_estimate(config);
  std::printf("%s\n", to_json_string(report, 2).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* env = std::getenv("VBCAST_MAX_DIM")) {
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || parsed < 2) {
      std::fprintf(stderr, "VBCAST_MAX_DIM must be an integer of at least 2, got '%s'\n", env);
      return 2;
    }
    try {
      config::set_max_dim(static_cast<int>(parsed));
    } catch (const std::exception& e) {
      std::fprintf(stderr, "VBCAST_MAX_DIM rejected: %s\n", e.what());
      return 2;
    }
  }

  CLI::App app{"Overheads, feasibility regions, and sampling experiments for "
               "virtual broadcasting protocols."};
  app.require_subcommand(1);

  OverheadOptions overhead;
  double uniform_eps = 0.0;
  CLI::App* overhead_cmd =
      app.add_subcommand("overhead", "Print the sampling overhead of one problem");
  overhead_cmd->add_option("kind", overhead.kind, "Problem family: abc, pbc, or exact")
      ->required()
      ->check(CLI::IsMember({"abc", "pbc", "exact"}));
  overhead_cmd->add_option("--d", overhead.d, "Local dimension")->capture_default_str();
  overhead_cmd->add_option("--n", overhead.n, "Receiver count")->capture_default_str();
  overhead_cmd->add_option("--p", overhead.p, "Heralding probability (pbc only)")
      ->capture_default_str();
  CLI::Option* eps1_opt =
      overhead_cmd->add_option("--eps1", overhead.eps1, "Fidelity shortfall, receiver 1");
  CLI::Option* eps2_opt =
      overhead_cmd->add_option("--eps2", overhead.eps2, "Fidelity shortfall, receiver 2");
  overhead_cmd->add_option("--eps", uniform_eps, "Uniform fidelity shortfall for all receivers")
      ->excludes(eps1_opt)
      ->excludes(eps2_opt);
  overhead_cmd->add_flag("--verify", overhead.verify,
                         "Cross run the available independent oracles");
  overhead_cmd->add_option("--tol", overhead.tol, "Largest oracle deviation accepted by --verify")
      ->capture_default_str();
  overhead_cmd->add_flag("--json", overhead.json, "Emit a JSON object instead of plain text");

  RegionOptions region;
  CLI::App* region_cmd = app.add_subcommand(
      "region", "Sweep a parameter grid and emit overhead, rate, and efficiency columns");
  region_cmd->add_option("kind", region.kind, "Problem family: abc or pbc")
      ->required()
      ->check(CLI::IsMember({"abc", "pbc"}));
  region_cmd->add_option("--d", region.d, "Local dimension")->capture_default_str();
  region_cmd->add_option("--n", region.n, "Receiver count")->capture_default_str();
  region_cmd->add_option("--grid", region.grid_text,
                         "Grid axis as lo:hi:steps (eps for abc, p for pbc)")
      ->required();
  region_cmd->add_option("--tol", region.tol, "Barrier solver tolerance for SDP cells")
      ->capture_default_str();
  region_cmd->add_flag("--json", region.json, "Emit a JSON array instead of CSV");

  MinNOptions min_n;
  CLI::App* min_n_cmd = app.add_subcommand(
      "min-n", "Smallest receiver count at which heralded broadcast beats copying");
  min_n_cmd->add_option("--d", min_n.d_range, "Local dimension, or an inclusive range lo:hi")
      ->capture_default_str();
  min_n_cmd->add_option("--p", min_n.p, "Heralding probability in (0, 1]")
      ->capture_default_str();
  min_n_cmd->add_flag("--json", min_n.json, "Emit a JSON array instead of a table");

  VerifyOptions verify;
  bool verify_json = false;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "Run one verification suite and print its JSON report");
  verify_cmd
      ->add_option("suite", verify.suite,
                   "closed-forms, spectra, twirl, sdp, sampling, or all")
      ->required();
  verify_cmd->add_option("--seed", verify.seed, "Seed for the randomised checks")
      ->capture_default_str();
  verify_cmd->add_flag("--json", verify_json, "Accepted for uniformity; output is always JSON");

  SampleOptions sample;
  bool sample_json = false;
  CLI::App* sample_cmd = app.add_subcommand(
      "sample", "Run the sampling experiment described by a JSON config file");
  sample_cmd->add_option("config", sample.config_path, "Path to the experiment config JSON")
      ->required();
  CLI::Option* sample_seed =
      sample_cmd->add_option("--seed", sample.seed, "Override the seed from the config file");
  sample_cmd->add_flag("--json", sample_json, "Accepted for uniformity; output is always JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (overhead_cmd->parsed()) {
      if (overhead_cmd->count("--eps") > 0) {
        overhead.eps1 = uniform_eps;
        overhead.eps2 = uniform_eps;
      }
      return run_overhead(overhead);
    }
    if (region_cmd->parsed()) return run_region(region);
    if (min_n_cmd->parsed()) return run_min_n(min_n);
    if (verify_cmd->parsed()) return run_verify(verify);
    if (sample_cmd->parsed()) {
      sample.seed_given = sample_seed->count() > 0;
      return run_sample(sample);
    }
  } catch (const argument_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const size_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}
