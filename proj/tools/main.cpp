#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fbs/bench.hpp"

namespace {

using fbs::bench::ConfigError;
using fbs::bench::json;

json load_config(const std::string& path) {
  std::ifstream ifs(path);
  if (!ifs) throw ConfigError("cannot read config file: " + path);
  try {
    return json::parse(ifs, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream ofs(p, std::ios::binary);
  if (!ofs) throw std::runtime_error("cannot open " + p.string() + " for writing");
  ofs << content;
  ofs.flush();
  if (!ofs) throw std::runtime_error("short write to " + p.string());
}

struct OutputSpec {
  std::string dir;            // empty = no files
  std::string format = "csv"; // trajectory/iterates container: csv or json
};

// "output" section of a config plus CLI overrides.
OutputSpec resolve_output(const json& cfg, const std::string& cli_out,
                          const std::string& cli_format) {
  OutputSpec spec;
  if (cfg.contains("output")) {
    const json& o = cfg.at("output");
    if (!o.is_object()) throw ConfigError("output must be an object");
    for (auto it = o.begin(); it != o.end(); ++it) {
      if (it.key() != "dir" && it.key() != "format")
        throw ConfigError("output: unknown key \"" + it.key() + "\"");
      if (!it.value().is_string()) throw ConfigError("output." + it.key() + " must be a string");
    }
    if (o.contains("dir")) spec.dir = o.at("dir").get<std::string>();
    if (o.contains("format")) spec.format = o.at("format").get<std::string>();
  }
  if (!cli_out.empty()) spec.dir = cli_out;
  if (!cli_format.empty()) spec.format = cli_format;
  if (spec.format != "csv" && spec.format != "json")
    throw ConfigError("output.format must be \"csv\" or \"json\"");
  return spec;
}

void write_solution_files(const OutputSpec& spec, const fbs::Trajectory& tr,
                          const fbs::IterateLog* iterates, const fbs::Vector* zstar,
                          const json& report) {
  if (spec.dir.empty()) return;
  const std::filesystem::path dir(spec.dir);
  std::filesystem::create_directories(dir);
  if (spec.format == "csv") {
    std::ostringstream oss;
    fbs::write_trajectory_csv(oss, tr, zstar);
    write_text(dir / "trajectory.csv", oss.str());
    if (iterates) {
      std::ostringstream ios;
      fbs::write_iterates_csv(ios, *iterates);
      write_text(dir / "iterates.csv", ios.str());
    }
  } else {
    write_text(dir / "trajectory.json", fbs::bench::trajectory_to_json(tr, zstar).dump(2) + "\n");
    if (iterates)
      write_text(dir / "iterates.json", fbs::bench::iterates_to_json(*iterates).dump(2) + "\n");
  }
  write_text(dir / "report.json", report.dump(2) + "\n");
}

std::vector<std::pair<double, double>> parse_cells(const std::string& s) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto pos = tok.find(':');
    if (pos == std::string::npos || pos == 0 || pos + 1 >= tok.size())
      throw ConfigError("--cells: expected comma-separated \"b3:p3\" items, got \"" + tok + "\"");
    try {
      std::size_t used1 = 0, used2 = 0;
      const double b3 = std::stod(tok.substr(0, pos), &used1);
      const double p3 = std::stod(tok.substr(pos + 1), &used2);
      if (used1 != pos || used2 != tok.size() - pos - 1)
        throw std::invalid_argument(tok);
      out.emplace_back(b3, p3);
    } catch (const std::exception&) {
      throw ConfigError("--cells: cannot parse \"" + tok + "\" as b3:p3");
    }
  }
  if (out.empty()) throw ConfigError("--cells: no cells given");
  return out;
}

int do_solve(const std::string& config_path, const std::string& out, const std::string& format,
             bool quiet) {
  json cfg = load_config(config_path);
  const OutputSpec spec = resolve_output(cfg, out, format);
  fbs::bench::SolveOutput so = fbs::bench::run_config(cfg);
  const json report = so.report.to_json();
  const fbs::Vector* zstar = so.problem.zstar ? &*so.problem.zstar : nullptr;
  write_solution_files(spec, so.trajectory, so.iterates ? &*so.iterates : nullptr, zstar, report);
  if (!quiet) std::cout << report.dump(2) << "\n";
  if (so.iterates && !so.iterates->converged) {
    std::cerr << "error: discrete stage did not reach tol within max_iters "
                 "(final residual "
              << so.iterates->residuals.back() << "); try a smaller beta or \"beta\": \"auto\"\n";
    return 1;
  }
  return 0;
}

int do_example1(std::uint64_t seed, const std::string& out, const std::string& format, bool quiet,
                const fbs::bench::Example1Options& opts) {
  OutputSpec spec = resolve_output(json::object(), out, format);
  fbs::bench::Example1Result res = fbs::bench::run_example1(seed, opts);
  const json report = res.report.to_json();
  const fbs::Vector zstar = fbs::Vector::Zero(res.instance.dim());
  write_solution_files(spec, res.trajectory, &res.iterates, &zstar, report);
  if (!quiet) std::cout << report.dump(2) << "\n";
  return 0;
}

int do_sweep(std::uint64_t seed, const std::string& out, bool quiet, double threshold,
             const std::string& cells_str, const fbs::bench::Example1Options& opts) {
  const auto cells = parse_cells(cells_str);
  if (!(threshold > 0)) throw ConfigError("--threshold must be positive");
  fbs::bench::SweepResult sr = fbs::bench::run_sweep(seed, cells, threshold, opts);
  const json report = fbs::bench::sweep_report(sr);
  if (!out.empty()) {
    const std::filesystem::path dir(out);
    std::filesystem::create_directories(dir);
    std::ostringstream oss;
    fbs::bench::write_sweep_csv(oss, sr);
    write_text(dir / "sweep.csv", oss.str());
    write_text(dir / "sweep.json", report.dump(2) + "\n");
  }
  if (!quiet) std::cout << report.dump(2) << "\n";
  return 0;
}

int do_check(const std::string& config_path) {
  json cfg = load_config(config_path);
  if (!cfg.contains("problem")) throw ConfigError("config: missing required section \"problem\"");
  std::uint64_t seed = 0;
  if (cfg.contains("seed") && cfg.at("seed").is_number_integer())
    seed = cfg.at("seed").get<std::uint64_t>();
  fbs::Rng rng(seed);
  // An infeasible step surfaces as ConfigError (exit 2) with the violated
  // clause named in the message.
  fbs::bench::BuiltProblem bp = fbs::bench::build_problem(cfg.at("problem"), rng);
  const fbs::AssumptionReport& a = bp.instance.assumption();
  json outj;
  outj["holds"] = a.holds;
  outj["violated_clause"] = a.violated_clause;
  outj["clause1"] = a.clause1;
  outj["clause2"] = a.clause2;
  outj["c"] = bp.instance.contraction();
  outj["gamma"] = bp.instance.gamma();
  outj["dim"] = bp.instance.dim();
  std::cout << outj.dump(2) << "\n";
  return 0;
}

int do_envelope(double alpha, double beta, double b1, double b2, double b3, double c, double T_p,
                double epsilon, long rows) {
  try {
    fbs::DynamicsParams params;
    params.b1 = b1;
    params.b2 = b2;
    params.b3 = b3;
    params.p3 = 0.0;
    if (!(alpha > 2.0)) throw std::invalid_argument("--alpha must exceed 2");
    params.p1 = 1.0 - 2.0 / alpha;
    params.p2 = 1.0 + 2.0 / alpha;
    params.T_p = T_p;
    params.K_p = fbs::gain_Kp(params, c);
    params.validate();

    fbs::DiscreteConfig dc;
    dc.alpha = alpha;
    dc.beta = beta;
    dc.epsilon = epsilon;
    dc.validate();

    const fbs::SettlingBounds sb = fbs::settling_bounds(params, c);
    const long n_star = fbs::envelope_n_star(dc, sb.M1, sb.M2);
    std::cout << "# K_p = " << fbs::bench::format_double(params.K_p)
              << ", M1 = " << fbs::bench::format_double(sb.M1)
              << ", M2 = " << fbs::bench::format_double(sb.M2) << ", n_star = " << n_star << "\n";
    std::cout << "n,envelope\n";
    const long stride = std::max(1L, n_star / std::max(1L, rows));
    for (long n = 0;; n += stride) {
      std::cout << n << "," << fbs::bench::format_double(fbs::envelope_bound(n, dc, sb.M1, sb.M2))
                << "\n";
      if (n > n_star) break;
    }
    return 0;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predefined-time forward-backward splitting flows for monotone inclusions"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format;
  bool quiet = false;
  std::uint64_t seed = 0;

  fbs::bench::Example1Options opts;
  double threshold = 1e-6;
  std::string cells = "0:0,5:0,5:0.5,5:1,5:1.2";

  double env_alpha = 200.0, env_beta = 0.005, env_b1 = 20.0, env_b2 = 200.0, env_b3 = 5.0;
  double env_c = 0.0, env_Tp = 5.0, env_eps = 1e-4;
  long env_rows = 40;

  CLI::App* solve = app.add_subcommand("solve", "Run a config-driven solve");
  solve->add_option("--config", config_path, "JSON config file")->required();
  solve->add_option("--out", out_dir, "Directory for trajectory/iterates/report files");
  solve->add_option("--format", format, "Container for trajectory and iterates")
      ->check(CLI::IsMember({"csv", "json"}));
  solve->add_flag("--quiet", quiet, "Suppress the report on stdout");

  CLI::App* ex1 = app.add_subcommand("example1", "Run the canonical random Gram benchmark");
  ex1->add_option("--seed", seed, "RNG seed");
  ex1->add_option("--out", out_dir, "Directory for trajectory/iterates/report files");
  ex1->add_option("--format", format, "Container for trajectory and iterates")
      ->check(CLI::IsMember({"csv", "json"}));
  ex1->add_flag("--quiet", quiet, "Suppress the report on stdout");
  ex1->add_option("--m", opts.m, "Rows of the random factor");
  ex1->add_option("--n", opts.n, "Columns of the random factor (problem dimension)");
  ex1->add_option("--b3", opts.b3, "Constant weight term");
  ex1->add_option("--beta", opts.beta, "First discrete step candidate");
  ex1->add_option("--alpha", opts.alpha, "Exponent parameter (p1 = 1-2/alpha, p2 = 1+2/alpha)");
  ex1->add_option("--T_p", opts.T_p, "Prescribed settling time");

  CLI::App* sweep = app.add_subcommand("sweep", "Compare weight variants (b3, p3) on one instance");
  sweep->add_option("--seed", seed, "RNG seed");
  sweep->add_option("--out", out_dir, "Directory for sweep.csv and sweep.json");
  sweep->add_flag("--quiet", quiet, "Suppress the report on stdout");
  sweep->add_option("--threshold", threshold, "Squared-error threshold for the timing column");
  sweep->add_option("--cells", cells, "Comma-separated b3:p3 cells");
  sweep->add_option("--T_p", opts.T_p, "Prescribed settling time of the base tuning");

  CLI::App* check = app.add_subcommand("check", "Validate the feasibility conditions of a config");
  check->add_option("--config", config_path, "JSON config file")->required();

  CLI::App* envelope = app.add_subcommand("envelope", "Print the discrete decrease envelope");
  envelope->add_option("--alpha", env_alpha, "Exponent parameter");
  envelope->add_option("--beta", env_beta, "Step size");
  envelope->add_option("--b1", env_b1, "Weight of the sublinear term");
  envelope->add_option("--b2", env_b2, "Weight of the superlinear term");
  envelope->add_option("--b3", env_b3, "Constant weight term");
  envelope->add_option("--c", env_c, "Contraction factor of the instance")->required();
  envelope->add_option("--T_p", env_Tp, "Prescribed settling time");
  envelope->add_option("--epsilon", env_eps, "Additive envelope floor");
  envelope->add_option("--rows", env_rows, "Approximate number of table rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return do_solve(config_path, out_dir, format, quiet);
    if (ex1->parsed()) return do_example1(seed, out_dir, format, quiet, opts);
    if (sweep->parsed()) return do_sweep(seed, out_dir, quiet, threshold, cells, opts);
    if (check->parsed()) return do_check(config_path);
    if (envelope->parsed())
      return do_envelope(env_alpha, env_beta, env_b1, env_b2, env_b3, env_c, env_Tp, env_eps,
                         env_rows);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
