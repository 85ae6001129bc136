#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lsopt/estimators.hpp"
#include "lsopt/optimizer.hpp"

namespace lsopt {

// A fully explicit experiment description, parsed from `key = value` text.
struct ExperimentConfig {
  // oracle selection
  std::string oracle;                 // "synthetic" | "classification"
  std::string objective = "pl_sine";  // synthetic: "pl_sine" | "shifted_quadratic"
  int dim = 1;
  double sigma2 = 0.0;
  double delta = 0.0;
  double bias_fraction = 0.0;
  double quad_curvature = 1.0;
  double w0 = 3.0;                    // synthetic start, replicated across dim
  std::string dataset_path;           // classification: load when nonempty
  int gen_K = 2;
  int gen_d = 2;
  int gen_n = 100;
  double gen_separation = 6.0;
  double gen_label_noise = 0.0;
  std::uint64_t gen_seed = 12345;
  int holdout = 0;                    // examples held out from the tail
  std::string model = "softmax_linear";
  int hidden = 16;

  // algorithm
  std::string algorithm = "baseline";  // "baseline" | "lsr" | "tsla"
  double theta = 0.0;
  std::string source = "uniform";      // "uniform" | "teacher"
  double eta = 0.1;
  long long iters = 0;                 // synthetic iteration budget
  int epochs = 0;                      // classification epoch budget
  double eta1 = 0.0;                   // tsla stage 1 rate (0 = use eta)
  double eta2 = 0.0;                   // tsla stage 2 rate (0 = eta1 / stage_lr_divisor)
  long long T1 = -1;                   // tsla stage 1 length (synthetic, -1 = unset)
  int drop_epoch = -1;                 // tsla drop point in epochs (classification)
  double stage_lr_divisor = 1.0;
  bool tsla_auto = false;              // derive the schedule from the constants
  double epsilon = 0.1;

  // execution
  int repeats = 1;
  std::uint64_t base_seed = 1;
  std::vector<long long> sweep_s;      // drop points: epochs (classification) or iterations
  std::vector<double> sweep_theta;
  int eval_stride = 0;                 // 0 = 1 for synthetic, one epoch for classification
  std::string out_dir = "out";

  // estimation / verification
  std::string verify_target;           // "" | "lsr_bound" | "bias_floor" |
                                       // "baseline_bound" | "two_stage" | "smoothed_moment"
  long long mc_draws = 100000;
  int estimate_samples = 2000;
  int estimate_probes = 200;
  double region_radius = 1.0;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Parses the line-based `key = value` format ('#' starts a comment). Unknown,
// duplicate, malformed, or mutually inconsistent keys raise ParseError with
// the line and key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Full echo of a config with every applicable default made explicit;
// parse_config(config_to_text(c)) == c.
std::string config_to_text(const ExperimentConfig& config);

// Cross-field validation used by parse_config and run_experiment.
void validate_config(const ExperimentConfig& config);

struct SummaryRow {
  std::string algorithm;
  int repeats = 0;
  double final_objective_mean = 0.0;
  double final_objective_std = 0.0;
  bool has_accuracy = false;
  double final_accuracy_mean = 0.0;
  double final_accuracy_std = 0.0;
  double stationarity_mean = 0.0;
  double stationarity_std = 0.0;
};

std::string summary_to_csv(const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> summary_from_csv(const std::string& text);

struct RunOutput {
  RunTrace trace;
  // recorded (t, train accuracy, holdout accuracy) triples; classification only
  std::vector<std::array<double, 3>> accuracy;
  // (train, holdout) top-5 at the same iterates; only emitted when K > 10,
  // where top-5 is not yet saturated
  std::vector<std::array<double, 2>> accuracy_top5;
  double final_objective = 0.0;
  double final_accuracy = 0.0;
  // mean grad_norm_sq over recorded iterates before the final one
  // (second stage only for two-stage runs)
  double stationarity = 0.0;
};

struct ExperimentResult {
  std::vector<std::string> labels;   // one per sweep point
  std::vector<RunOutput> runs;       // sweep-major, repeats within a sweep point
  std::vector<SummaryRow> summary;   // one row per sweep point
};

// Executes repeats x sweep-points runs with seeds
// base_seed + sweep_index * repeats + repeat_index, writes one trace CSV per
// run (and accuracy CSVs for classification), a summary CSV, and the config
// echo into out_dir. Identical configs reproduce all files bit for bit.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct BoundCheck {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool expect_less_equal = true;  // false checks measured > bound
};

// Algorithms x metrics table plus one PASS/FAIL line per bound check.
std::string compare_report(const std::vector<SummaryRow>& rows,
                           const std::vector<BoundCheck>& checks);

struct VerifyOutcome {
  std::string target;
  double measured = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string report;  // full human-readable text
};

// Runs the Monte-Carlo experiment named by config.verify_target and compares
// the measured stationarity (or smoothed moment) against its closed-form
// bound. Writes verify_report.txt into out_dir.
VerifyOutcome run_verification(const ExperimentConfig& config);

// Computes every problem constant the theory consumes for the configured
// oracle plus a smoothed-moment report at the starting point; writes
// constants.txt into out_dir and returns the text.
std::string run_estimation(const ExperimentConfig& config);

}  // namespace lsopt
