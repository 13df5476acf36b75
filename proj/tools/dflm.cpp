#include "dflm/bench.hpp"
#include "dflm/config_io.hpp"
#include "dflm/format.hpp"
#include "dflm/lm_solver.hpp"
#include "dflm/problems.hpp"
#include "dflm/report.hpp"
#include "dflm/rng.hpp"
#include "dflm/validate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

struct Fatal {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) { throw Fatal{code, message}; }

dflm::SolverConfig load_config(const std::string& path) {
  dflm::SolverConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) fail(kExitUsage, "cannot open config file: " + path);
  try {
    json j = json::parse(in);
    cfg = dflm::solver_config_from_json(j);
  } catch (const std::exception& e) {
    fail(kExitUsage, "bad config file " + path + ": " + e.what());
  }
  return cfg;
}

// run directories are namespaced by timestamp + seed hash and never reused
fs::path make_run_dir(const fs::path& output_dir, std::uint64_t seed_material) {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);
  char hash[16];
  std::snprintf(hash, sizeof(hash), "%08llx",
                static_cast<unsigned long long>(dflm::mix_seed(seed_material, now) & 0xffffffffULL));
  std::string base = std::string(stamp) + "-" + hash;
  fs::path dir = output_dir / base;
  for (int i = 2; fs::exists(dir); ++i) dir = output_dir / (base + "-" + std::to_string(i));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(kExitUsage, "cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(kExitUsage, "cannot write " + path.string());
  out << contents;
  if (!out) fail(kExitUsage, "write failed for " + path.string());
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// "a..b" (inclusive) or a count "k" meaning 1..k
std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  auto dots = spec.find("..");
  if (dots != std::string::npos) {
    std::uint64_t a = std::stoull(spec.substr(0, dots));
    std::uint64_t b = std::stoull(spec.substr(dots + 2));
    if (b < a) fail(kExitUsage, "bad seed range: " + spec);
    for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
  } else {
    std::uint64_t k = std::stoull(spec);
    for (std::uint64_t s = 1; s <= k; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) fail(kExitUsage, "empty seed list");
  return seeds;
}

std::string tau_tag(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.0e", tau);
  return buf;
}

fs::path locate_records(const std::string& records_flag, const std::string& output_dir) {
  if (!records_flag.empty()) {
    if (!fs::exists(records_flag)) fail(kExitUsage, "records file not found: " + records_flag);
    return records_flag;
  }
  std::vector<fs::path> found;
  if (fs::exists(output_dir))
    for (const auto& entry : fs::recursive_directory_iterator(output_dir))
      if (entry.is_regular_file() && entry.path().filename() == "records.json")
        found.push_back(entry.path());
  if (found.empty()) fail(kExitUsage, "no records.json under " + output_dir);
  std::sort(found.begin(), found.end());
  return found.back();  // run ids sort by timestamp; take the latest
}

int cmd_solve(const std::string& problem_name, int n, int p_fixed, bool p_adaptive,
              const std::string& dist, std::uint64_t seed, const std::string& config_path,
              const std::string& output_dir, bool fd_baseline, const json& overrides) {
  dflm::SolverConfig cfg = load_config(config_path);
  try {
    json merged = dflm::solver_config_to_json(cfg);
    merged.update(overrides);
    cfg = dflm::solver_config_from_json(merged);
  } catch (const std::exception& e) {
    fail(kExitUsage, std::string("bad override: ") + e.what());
  }
  cfg.seed = seed;
  if (!dist.empty()) {
    try {
      cfg.distribution = dflm::distribution_from_string(dist);
    } catch (const std::exception& e) {
      fail(kExitUsage, e.what());
    }
  }
  if (p_fixed > 0) cfg.p_schedule = dflm::PSchedule::fixed(p_fixed);
  if (p_adaptive) cfg.p_schedule = dflm::PSchedule::adaptive();

  dflm::Problem problem;
  try {
    problem = dflm::builtin_registry().make(problem_name, n);
  } catch (const std::exception& e) {
    fail(kExitUsage, e.what());
  }
  try {
    cfg.validate();
    dflm::resolve(cfg.p_schedule, problem.n);
  } catch (const std::exception& e) {
    fail(kExitUsage, e.what());
  }

  dflm::RunRecord rec =
      fd_baseline ? dflm::solve_fd_baseline(problem, cfg) : dflm::solve(problem, cfg);

  fs::path dir = make_run_dir(output_dir, dflm::mix_seed(seed, dflm::fnv1a64(problem_name)));
  {
    std::ostringstream hist;
    dflm::write_history_csv(hist, rec);
    write_file(dir / "history.csv", hist.str());
  }
  write_file(dir / "summary.json", dflm::run_summary_json(rec).dump(1) + "\n");

  std::cout << "problem " << problem.name << " n=" << problem.n << " solver=" << rec.solver_id
            << "\nstop: " << dflm::to_string(rec.stop)
            << (rec.stop_detail.empty() ? "" : " (" + rec.stop_detail + ")")
            << "\nfinal f: " << dflm::g17(rec.final_f) << "  fevals: " << rec.fevals
            << "  iterations: " << rec.history.size() << "\noutput: " << dir.string() << "\n";
  return rec.stop == dflm::StopReason::Error ? kExitValidation : kExitOk;
}

int cmd_bench(const std::string& problems_flag, int n, const std::string& seeds_flag,
              const std::string& solvers_flag, const std::string& config_path,
              const std::string& output_dir, int workers) {
  dflm::SolverConfig base = load_config(config_path);

  std::vector<dflm::Problem> problems;
  for (const auto& name : split_csv(problems_flag)) {
    try {
      problems.push_back(dflm::builtin_registry().make(name, dflm::nearest_valid_n(name, n)));
    } catch (const std::exception& e) {
      fail(kExitUsage, e.what());
    }
  }
  std::vector<dflm::SolverSpec> solvers;
  for (const auto& id : split_csv(solvers_flag)) {
    try {
      solvers.push_back(dflm::solver_spec_from_id(id));
    } catch (const std::exception& e) {
      fail(kExitUsage, e.what());
    }
  }
  std::vector<std::uint64_t> seeds = parse_seeds(seeds_flag);

  auto records = dflm::run_suite(problems, solvers, seeds, base, workers);

  fs::path dir = make_run_dir(output_dir, dflm::fnv1a64(problems_flag + solvers_flag + seeds_flag));
  {
    std::ostringstream os;
    dflm::write_records_json(os, records);
    write_file(dir / "records.json", os.str());
  }
  {
    std::ostringstream os;
    dflm::write_summary_csv(os, records);
    write_file(dir / "summary.csv", os.str());
  }

  int errors = 0;
  for (const auto& r : records)
    if (r.stop == dflm::StopReason::Error) ++errors;
  std::cout << records.size() << " runs (" << problems.size() << " problems x " << solvers.size()
            << " solvers x " << seeds.size() << " seeds), " << errors
            << " errors\noutput: " << dir.string() << "\n";
  return kExitOk;
}

int cmd_profile(const std::string& records_flag, const std::string& output_dir,
                std::vector<double> taus) {
  fs::path records_path = locate_records(records_flag, output_dir);
  std::vector<dflm::RunRecord> records;
  try {
    std::ifstream in(records_path);
    if (!in) fail(kExitUsage, "cannot open " + records_path.string());
    records = dflm::read_records_json(in);
  } catch (const Fatal&) {
    throw;
  } catch (const std::exception& e) {
    fail(kExitUsage, "corrupted records file " + records_path.string() + ": " + e.what());
  }
  if (records.empty()) fail(kExitUsage, "no records in " + records_path.string());

  if (taus.empty()) taus = {1e-2, 1e-4, 1e-6, 1e-8};
  fs::path dir = records_path.parent_path();
  for (double tau : taus) {
    if (!(tau > 0.0 && tau < 1.0)) fail(kExitUsage, "tau must be in (0, 1)");
    auto prof = dflm::profile(dflm::build_feval_matrix(records, tau));
    std::string tag = tau_tag(tau);
    {
      std::ostringstream os;
      dflm::write_profile_csv(os, prof);
      write_file(dir / ("profile_tau" + tag + ".csv"), os.str());
    }
    {
      std::ostringstream os;
      dflm::write_profile_svg(os, prof);
      write_file(dir / ("profile_tau" + tag + ".svg"), os.str());
    }
    std::cout << "tau=" << tag << ": profile over " << prof.problem_ids.size() << " problems, "
              << prof.solver_ids.size() << " solvers -> " << (dir / ("profile_tau" + tag)).string()
              << ".{csv,svg}\n";
  }
  return kExitOk;
}

int cmd_validate(bool verbose, double strict_tol) {
  dflm::ValidateOptions opts;
  opts.verbose = verbose;
  if (strict_tol > 0.0) opts.recovery_tol = strict_tol;
  auto results = dflm::run_validation(opts);
  size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  int failed = 0;
  for (const auto& r : results) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name;
    if (!r.pass || verbose) std::cout << std::string(width - r.name.size() + 2, ' ') << r.detail;
    std::cout << "\n";
    if (!r.pass) ++failed;
  }
  std::cout << (results.size() - failed) << "/" << results.size() << " checks passed\n";
  return failed ? kExitValidation : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"derivative-free Levenberg-Marquardt for sparse nonlinear least squares"};
  app.require_subcommand(1);

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "run one solver instance on one problem");
  std::string problem_name, dist, config_path, output_dir = "out";
  int n = 0, p_fixed = 0;
  bool p_adaptive = false, fd_baseline = false, sigma_theory = false;
  std::uint64_t seed = 1;
  double theta0 = -1, xi = -1, lipschitz = -1;
  long max_fevals = -1;
  std::string mode;
  solve_cmd->add_option("--problem", problem_name, "problem name")->required();
  solve_cmd->add_option("--n", n, "problem dimension");
  solve_cmd->add_option("--p", p_fixed, "fixed interpolation count");
  solve_cmd->add_flag("--p-adaptive", p_adaptive, "adaptive interpolation count");
  solve_cmd->add_option("--distribution", dist, "gaussian | bernoulli | bernoulli-like");
  solve_cmd->add_option("--seed", seed, "RNG seed");
  solve_cmd->add_option("--config", config_path, "JSON config file");
  solve_cmd->add_option("--output-dir", output_dir, "output directory");
  solve_cmd->add_flag("--fd-baseline", fd_baseline, "run the finite-difference baseline");
  solve_cmd->add_option("--mode", mode, "noiseless | denoising");
  solve_cmd->add_option("--xi", xi, "denoising radius xi");
  solve_cmd->add_option("--lipschitz", lipschitz, "gradient Lipschitz estimate for xi");
  solve_cmd->add_option("--theta0", theta0, "initial LM scaling theta0");
  solve_cmd->add_option("--max-fevals", max_fevals, "evaluation budget");
  solve_cmd->add_flag("--sigma-theory", sigma_theory, "unclamped sigma = ||d_{k-1}||");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "run the multi-solver benchmark suite");
  std::string problems_flag = "broyden,valley,freudenstein,trigonometric";
  std::string solvers_flag = "dflm-p2,dflm-p3,dflm-p4,dflm-adaptive,fd-lm";
  std::string seeds_flag = "50";
  int bench_n = 100, workers = 0;
  std::string bench_config, bench_out = "out";
  bench_cmd->add_option("--problems", problems_flag, "comma-separated problem names");
  bench_cmd->add_option("--n", bench_n, "target dimension (rounded up per family)");
  bench_cmd->add_option("--seeds", seeds_flag, "seed count k (1..k) or range a..b");
  bench_cmd->add_option("--solvers", solvers_flag, "comma-separated solver ids");
  bench_cmd->add_option("--config", bench_config, "JSON config file");
  bench_cmd->add_option("--output-dir", bench_out, "output directory");
  bench_cmd->add_option("--threads", workers, "worker threads (0 = SPARSE_DFLM_THREADS/auto)");

  // profile
  auto* prof_cmd = app.add_subcommand("profile", "compute performance profiles from records");
  std::string records_flag, prof_out = "out";
  std::vector<double> taus;
  prof_cmd->add_option("--records", records_flag, "records.json path");
  prof_cmd->add_option("--output-dir", prof_out, "directory to scan for records.json");
  prof_cmd->add_option("--tau", taus, "accuracy levels (default 1e-2 1e-4 1e-6 1e-8)");

  // validate
  auto* val_cmd = app.add_subcommand("validate", "run the small-scale invariant suite");
  bool verbose = false;
  double strict_tol = -1;
  val_cmd->add_flag("--verbose", verbose, "print per-check values");
  val_cmd->add_option("--strict-tol", strict_tol, "override the recovery check tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve_cmd) {
      json overrides = json::object();
      if (theta0 >= 0) overrides["theta0"] = theta0;
      if (max_fevals >= 0) overrides["max_fevals"] = max_fevals;
      if (!mode.empty()) overrides["mode"] = mode;
      if (xi >= 0) overrides["denoise_xi"] = xi;
      if (lipschitz >= 0) overrides["lipschitz_estimate"] = lipschitz;
      if (sigma_theory) overrides["sigma_theory_mode"] = true;
      return cmd_solve(problem_name, n, p_fixed, p_adaptive, dist, seed, config_path, output_dir,
                       fd_baseline, overrides);
    }
    if (*bench_cmd)
      return cmd_bench(problems_flag, bench_n, seeds_flag, solvers_flag, bench_config, bench_out,
                       workers);
    if (*prof_cmd) return cmd_profile(records_flag, prof_out, taus);
    if (*val_cmd) return cmd_validate(verbose, strict_tol);
  } catch (const Fatal& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
