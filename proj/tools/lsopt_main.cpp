#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lsopt/errors.hpp"
#include "lsopt/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInvalidInput = 3;
constexpr int kExitDegenerate = 4;
constexpr int kExitVerifyFailed = 5;

lsopt::ExperimentConfig load(const std::string& path) {
  return lsopt::load_config(path);
}

int cmd_run(const std::string& config_path, bool is_sweep) {
  lsopt::ExperimentConfig cfg = load(config_path);
  const bool has_sweep = !cfg.sweep_s.empty() || !cfg.sweep_theta.empty();
  if (is_sweep && !has_sweep) {
    throw lsopt::ConfigError("sweep needs a sweep_s or sweep_theta key");
  }
  if (!is_sweep && has_sweep) {
    throw lsopt::ConfigError("config declares a sweep; use the sweep subcommand");
  }
  lsopt::ExperimentResult result = lsopt::run_experiment(cfg);
  std::cout << lsopt::compare_report(result.summary, {});
  std::cout << "wrote " << result.runs.size() << " trace files to " << cfg.out_dir << "\n";
  return kExitOk;
}

int cmd_estimate(const std::string& config_path) {
  lsopt::ExperimentConfig cfg = load(config_path);
  std::cout << lsopt::run_estimation(cfg);
  return kExitOk;
}

int cmd_verify(const std::string& config_path) {
  lsopt::ExperimentConfig cfg = load(config_path);
  lsopt::VerifyOutcome outcome = lsopt::run_verification(cfg);
  std::cout << outcome.report;
  return outcome.pass ? kExitOk : kExitVerifyFailed;
}

int cmd_report(const std::string& summary_path) {
  std::ifstream in(summary_path);
  if (!in) throw lsopt::InvalidInputError("cannot open summary '" + summary_path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::vector<lsopt::SummaryRow> rows = lsopt::summary_from_csv(buf.str());
  std::cout << lsopt::compare_report(rows, {});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"label-smoothing stochastic optimization lab"};
  app.require_subcommand(1);

  std::string run_config, sweep_config, estimate_config, verify_config, summary_path;
  CLI::App* run = app.add_subcommand("run", "run one experiment from a config file");
  run->add_option("config", run_config, "config file")->required();
  CLI::App* sweep = app.add_subcommand("sweep", "run a sweep over drop points or theta values");
  sweep->add_option("config", sweep_config, "config file")->required();
  CLI::App* estimate = app.add_subcommand("estimate", "estimate problem constants");
  estimate->add_option("config", estimate_config, "config file")->required();
  CLI::App* verify = app.add_subcommand("verify", "check a convergence bound by simulation");
  verify->add_option("config", verify_config, "config file")->required();
  CLI::App* report = app.add_subcommand("report", "render a summary.csv as a table");
  report->add_option("summary", summary_path, "summary csv file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(run_config, false);
    if (sweep->parsed()) return cmd_run(sweep_config, true);
    if (estimate->parsed()) return cmd_estimate(estimate_config);
    if (verify->parsed()) return cmd_verify(verify_config);
    if (report->parsed()) return cmd_report(summary_path);
  } catch (const lsopt::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const lsopt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const lsopt::DegenerateProblemError& e) {
    std::cerr << "degenerate problem: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const lsopt::ScheduleInfeasibleError& e) {
    std::cerr << "schedule infeasible: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const lsopt::InvalidInputError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
