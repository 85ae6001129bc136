#include "lsopt/harness.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include "lsopt/errors.hpp"
#include "lsopt/optimizer.hpp"

namespace lsopt {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("lsopt_harness_" + std::to_string(::getpid()) + "_" +
                                         std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string dir() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& content) const {
    std::string p = file(name);
    std::ofstream out(p);
    out << content;
    return p;
  }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string synthetic_text(const std::string& out_dir, const std::string& extra = "") {
  return "oracle = synthetic\n"
         "objective = pl_sine\n"
         "dim = 1\n"
         "sigma2 = 0.5\n"
         "delta = 0.1\n"
         "bias_fraction = 0.5\n"
         "w0 = 3\n"
         "algorithm = lsr\n"
         "theta = 0.3\n"
         "eta = 0.125\n"
         "iters = 60\n"
         "repeats = 2\n"
         "base_seed = 7\n"
         "eval_stride = 20\n"
         "out_dir = " +
         out_dir + "\n" + extra;
}

std::string classification_text(const std::string& out_dir, const std::string& extra = "") {
  return "oracle = classification\n"
         "gen_K = 3\n"
         "gen_d = 2\n"
         "gen_n = 40\n"
         "gen_separation = 5\n"
         "gen_label_noise = 0.1\n"
         "gen_seed = 19\n"
         "holdout = 10\n"
         "model = softmax_linear\n"
         "algorithm = lsr\n"
         "theta = 0.3\n"
         "eta = 0.5\n"
         "epochs = 2\n"
         "repeats = 1\n"
         "base_seed = 5\n"
         "out_dir = " +
         out_dir + "\n" + extra;
}

TEST(ParseConfig, AppliesDefaultsAndRoundTripsThroughEcho) {
  TempDir tmp;
  ExperimentConfig cfg = parse_config(synthetic_text(tmp.dir()));
  EXPECT_EQ(cfg.oracle, "synthetic");
  EXPECT_EQ(cfg.algorithm, "lsr");
  EXPECT_EQ(cfg.repeats, 2);
  EXPECT_EQ(cfg.source, "uniform");     // default made explicit by the echo
  EXPECT_EQ(cfg.mc_draws, 100000);      // untouched default
  ExperimentConfig back = parse_config(config_to_text(cfg));
  EXPECT_TRUE(back == cfg);
}

TEST(ParseConfig, RoundTripsEveryAlgorithmFamily) {
  TempDir tmp;
  std::vector<std::string> texts = {
      synthetic_text(tmp.dir(), "sweep_theta = 0.1,0.5\n"),
      classification_text(tmp.dir(), ""),
      "oracle = synthetic\nobjective = shifted_quadratic\ndim = 3\nquad_curvature = 2\n"
      "sigma2 = 1\ndelta = 0.2\nw0 = 1\nalgorithm = baseline\neta = 0.1\niters = 10\n"
      "out_dir = " + tmp.dir() + "\n",
      "oracle = synthetic\nobjective = pl_sine\ndim = 1\nsigma2 = 1\ndelta = 0.1\n"
      "w0 = 3\nalgorithm = tsla\ntheta = 0.5\neta1 = 0.125\neta2 = 0.01\nT1 = 5\n"
      "iters = 20\nout_dir = " + tmp.dir() + "\n",
      "oracle = synthetic\nobjective = pl_sine\ndim = 1\nsigma2 = 1\ndelta = 0.1\n"
      "w0 = 3\nalgorithm = tsla\ntsla_auto = true\nepsilon = 0.2\nout_dir = " + tmp.dir() + "\n",
      "oracle = classification\ngen_K = 3\ngen_d = 2\ngen_n = 30\ngen_seed = 2\n"
      "model = mlp\nhidden = 6\nalgorithm = tsla\ntheta = 0.4\neta = 0.5\n"
      "sweep_s = 1,2\nepochs = 3\nout_dir = " + tmp.dir() + "\n",
  };
  for (const std::string& text : texts) {
    ExperimentConfig cfg = parse_config(text);
    ExperimentConfig back = parse_config(config_to_text(cfg));
    EXPECT_TRUE(back == cfg) << text;
  }
}

TEST(ParseConfig, ReportsLineAndKeyOnErrors) {
  TempDir tmp;
  try {
    parse_config("oracle = synthetic\nnonsense_key = 5\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.field(), "nonsense_key");
    EXPECT_NE(std::string(e.what()).find("unknown key"), std::string::npos);
  }
  try {
    parse_config("oracle = synthetic\noracle = synthetic\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
  }
  EXPECT_THROW(parse_config("dim = not_a_number\n"), ParseError);
  EXPECT_THROW(parse_config("oracle synthetic\n"), ParseError);
  EXPECT_THROW(parse_config("dim =\n"), ParseError);
  EXPECT_THROW(parse_config(synthetic_text("", "")), ParseError);  // empty out_dir value
}

TEST(ParseConfig, CommentsAndBlankLinesAreIgnored) {
  TempDir tmp;
  std::string text = "# experiment\n\n" + synthetic_text(tmp.dir(), "# trailing comment\n");
  ExperimentConfig cfg = parse_config(text);
  EXPECT_EQ(cfg.oracle, "synthetic");
  std::string inline_text = synthetic_text(tmp.dir());
  size_t pos = inline_text.find("theta = 0.3\n");
  ASSERT_NE(pos, std::string::npos);
  inline_text.replace(pos, std::string("theta = 0.3\n").size(), "theta = 0.2 # strong\n");
  EXPECT_DOUBLE_EQ(parse_config(inline_text).theta, 0.2);
}

TEST(ValidateConfig, RejectsCrossFamilyKeys) {
  TempDir tmp;
  auto expect_field = [&](const std::string& text, const std::string& field) {
    try {
      parse_config(text);
      FAIL() << "expected ParseError for " << field;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.field(), field) << e.what();
    }
  };
  expect_field(synthetic_text(tmp.dir(), "epochs = 3\n"), "epochs");
  expect_field(synthetic_text(tmp.dir(), "holdout = 5\n"), "holdout");
  expect_field(classification_text(tmp.dir(), "iters = 10\n"), "iters");
  expect_field(classification_text(tmp.dir(), "sigma2 = 1\n"), "sigma2");
  expect_field(classification_text(tmp.dir(), "tsla_auto = true\n"), "tsla_auto");
  // single-stage algorithms reject two-stage keys
  expect_field(synthetic_text(tmp.dir(), "eta1 = 0.1\n"), "algorithm");
  // baseline must not smooth
  expect_field(
      "oracle = synthetic\nobjective = pl_sine\ndim = 1\nsigma2 = 1\nw0 = 3\n"
      "algorithm = baseline\ntheta = 0.5\neta = 0.1\niters = 5\nout_dir = " + tmp.dir() + "\n",
      "theta");
}

TEST(ValidateConfig, SweepBudgetAndExclusivityRules) {
  TempDir tmp;
  // sweep value beyond the epoch budget
  EXPECT_THROW(
      parse_config("oracle = classification\ngen_K = 3\ngen_d = 2\ngen_n = 30\ngen_seed = 2\n"
                   "model = softmax_linear\nalgorithm = tsla\ntheta = 0.4\neta = 0.5\n"
                   "sweep_s = 1,9\nepochs = 3\nout_dir = " + tmp.dir() + "\n"),
      ParseError);
  // both T1 and sweep_s
  EXPECT_THROW(
      parse_config("oracle = synthetic\nobjective = pl_sine\ndim = 1\nsigma2 = 1\ndelta = 0.1\n"
                   "w0 = 3\nalgorithm = tsla\ntheta = 0.5\neta1 = 0.1\nT1 = 2\nsweep_s = 1,2\n"
                   "iters = 10\nout_dir = " + tmp.dir() + "\n"),
      ParseError);
  // tsla with neither
  EXPECT_THROW(
      parse_config("oracle = synthetic\nobjective = pl_sine\ndim = 1\nsigma2 = 1\ndelta = 0.1\n"
                   "w0 = 3\nalgorithm = tsla\ntheta = 0.5\neta1 = 0.1\niters = 10\n"
                   "out_dir = " + tmp.dir() + "\n"),
      ParseError);
  // sweep_theta on tsla
  EXPECT_THROW(parse_config(
                   "oracle = synthetic\nobjective = pl_sine\ndim = 1\nsigma2 = 1\ndelta = 0.1\n"
                   "w0 = 3\nalgorithm = tsla\ntheta = 0.5\neta1 = 0.1\nT1 = 2\niters = 10\n"
                   "sweep_theta = 0.1\nout_dir = " + tmp.dir() + "\n"),
               ParseError);
}

TEST(SummaryCsv, RoundTripsWithAndWithoutAccuracy) {
  std::vector<SummaryRow> rows(2);
  rows[0].algorithm = "lsr(theta=0.3)";
  rows[0].repeats = 5;
  rows[0].final_objective_mean = 0.125;
  rows[0].final_objective_std = 0.01;
  rows[0].stationarity_mean = 0.5;
  rows[0].stationarity_std = 0.05;
  rows[1] = rows[0];
  rows[1].algorithm = "tsla(s=5)";
  rows[1].has_accuracy = true;
  rows[1].final_accuracy_mean = 0.9;
  rows[1].final_accuracy_std = 0.02;
  std::string csv = summary_to_csv(rows);
  std::vector<SummaryRow> back = summary_from_csv(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].algorithm, rows[0].algorithm);
  EXPECT_FALSE(back[0].has_accuracy);
  EXPECT_TRUE(back[1].has_accuracy);
  EXPECT_EQ(back[1].final_accuracy_mean, rows[1].final_accuracy_mean);
  EXPECT_EQ(back[0].final_objective_mean, rows[0].final_objective_mean);
  EXPECT_THROW(summary_from_csv("bad header\n"), ParseError);
}

TEST(RunExperiment, WritesDeterministicArtifacts) {
  TempDir tmp;
  ExperimentConfig cfg = parse_config(synthetic_text(tmp.file("out")));
  ExperimentResult result = run_experiment(cfg);
  ASSERT_EQ(result.labels.size(), 1u);
  EXPECT_EQ(result.labels[0], "lsr(theta=0.3)");
  ASSERT_EQ(result.runs.size(), 2u);
  ASSERT_EQ(result.summary.size(), 1u);
  EXPECT_EQ(result.summary[0].repeats, 2);
  EXPECT_FALSE(result.summary[0].has_accuracy);

  EXPECT_TRUE(fs::exists(tmp.file("out/config_echo.txt")));
  EXPECT_TRUE(fs::exists(tmp.file("out/trace_000_000.csv")));
  EXPECT_TRUE(fs::exists(tmp.file("out/trace_000_001.csv")));
  EXPECT_TRUE(fs::exists(tmp.file("out/summary.csv")));
  EXPECT_TRUE(parse_config(read_file(tmp.file("out/config_echo.txt"))) == cfg);

  std::string trace0 = read_file(tmp.file("out/trace_000_000.csv"));
  std::string summary = read_file(tmp.file("out/summary.csv"));
  ExperimentResult again = run_experiment(cfg);
  EXPECT_EQ(read_file(tmp.file("out/trace_000_000.csv")), trace0);
  EXPECT_EQ(read_file(tmp.file("out/summary.csv")), summary);

  ExperimentConfig other = cfg;
  other.base_seed = 8;
  run_experiment(other);
  EXPECT_NE(read_file(tmp.file("out/trace_000_000.csv")), trace0);
}

TEST(RunExperiment, SummaryMatchesTraceRecomputation) {
  TempDir tmp;
  ExperimentConfig cfg = parse_config(synthetic_text(tmp.file("out")));
  ExperimentResult result = run_experiment(cfg);
  double mean = 0.0;
  for (int r = 0; r < cfg.repeats; ++r) {
    RunTrace trace = read_trace_csv(tmp.file("out/trace_000_00" + std::to_string(r) + ".csv"));
    mean += trace.records.back().objective;
  }
  mean /= cfg.repeats;
  EXPECT_NEAR(result.summary[0].final_objective_mean, mean, 1e-12);
}

TEST(RunExperiment, SweepRunsAreOrderedAndSeedReproducible) {
  TempDir tmp;
  std::string sweep_text =
      "oracle = synthetic\nobjective = pl_sine\ndim = 1\nsigma2 = 1\ndelta = 0.1\nw0 = 3\n"
      "algorithm = tsla\ntheta = 0.5\neta1 = 0.125\neta2 = 0.01\nsweep_s = 20,5,10\n"
      "iters = 30\nrepeats = 2\nbase_seed = 100\neval_stride = 1\nout_dir = " +
      tmp.file("sweep") + "\n";
  ExperimentConfig cfg = parse_config(sweep_text);
  ASSERT_EQ(cfg.sweep_s.size(), 3u);
  EXPECT_EQ(cfg.sweep_s[0], 5);  // parse sorts ascending
  ExperimentResult result = run_experiment(cfg);
  ASSERT_EQ(result.labels.size(), 3u);
  EXPECT_EQ(result.labels[0], "tsla(T1=5)");
  EXPECT_EQ(result.labels[2], "tsla(T1=20)");
  ASSERT_EQ(result.runs.size(), 6u);

  // run (sweep index 1, repeat 0) must replay as a single run at seed 102
  std::string single_text =
      "oracle = synthetic\nobjective = pl_sine\ndim = 1\nsigma2 = 1\ndelta = 0.1\nw0 = 3\n"
      "algorithm = tsla\ntheta = 0.5\neta1 = 0.125\neta2 = 0.01\nT1 = 10\n"
      "iters = 30\nrepeats = 1\nbase_seed = 102\neval_stride = 1\nout_dir = " +
      tmp.file("single") + "\n";
  run_experiment(parse_config(single_text));
  EXPECT_EQ(read_file(tmp.file("sweep/trace_001_000.csv")),
            read_file(tmp.file("single/trace_000_000.csv")));
}

TEST(RunExperiment, ClassificationEmitsAccuracySeries) {
  TempDir tmp;
  ExperimentConfig cfg = parse_config(classification_text(tmp.file("out")));
  ExperimentResult result = run_experiment(cfg);
  ASSERT_EQ(result.summary.size(), 1u);
  EXPECT_TRUE(result.summary[0].has_accuracy);
  EXPECT_GE(result.summary[0].final_accuracy_mean, 0.0);
  EXPECT_LE(result.summary[0].final_accuracy_mean, 1.0);
  ASSERT_EQ(result.runs.size(), 1u);
  EXPECT_FALSE(result.runs[0].accuracy.empty());

  std::string acc = read_file(tmp.file("out/accuracy_000_000.csv"));
  EXPECT_EQ(acc.substr(0, acc.find('\n')), "t,train_accuracy,holdout_accuracy");
  // 30 training examples after the holdout split, 2 epochs, records at 0/30/60
  EXPECT_EQ(result.runs[0].trace.total_T(), 60);
  ExperimentConfig no_holdout = cfg;
  no_holdout.holdout = 0;
  no_holdout.out_dir = tmp.file("nh");
  run_experiment(no_holdout);
  std::string acc2 = read_file(tmp.file("nh/accuracy_000_000.csv"));
  EXPECT_EQ(acc2.substr(0, acc2.find('\n')), "t,train_accuracy");
}

TEST(RunExperiment, ManyClassRunsAlsoReportTopFive) {
  TempDir tmp;
  std::string text =
      "oracle = classification\ngen_K = 12\ngen_d = 2\ngen_n = 48\ngen_separation = 4\n"
      "gen_seed = 3\nholdout = 12\nmodel = softmax_linear\nalgorithm = baseline\n"
      "eta = 0.5\nepochs = 1\nrepeats = 1\nbase_seed = 2\nout_dir = " + tmp.file("out") + "\n";
  ExperimentResult result = run_experiment(parse_config(text));
  ASSERT_FALSE(result.runs[0].accuracy.empty());
  ASSERT_EQ(result.runs[0].accuracy_top5.size(), result.runs[0].accuracy.size());
  for (size_t k = 0; k < result.runs[0].accuracy.size(); ++k) {
    EXPECT_GE(result.runs[0].accuracy_top5[k][0], result.runs[0].accuracy[k][1]);
    EXPECT_GE(result.runs[0].accuracy_top5[k][1], result.runs[0].accuracy[k][2]);
  }
  std::string acc = read_file(tmp.file("out/accuracy_000_000.csv"));
  EXPECT_EQ(acc.substr(0, acc.find('\n')),
            "t,train_accuracy,holdout_accuracy,train_top5,holdout_top5");
  // a 3-class run keeps the narrow schema
  ExperimentConfig small = parse_config(classification_text(tmp.file("small")));
  EXPECT_TRUE(run_experiment(small).runs[0].accuracy_top5.empty());
}

TEST(RunExperiment, TslaAutoDerivesScheduleFromConstants) {
  TempDir tmp;
  std::string text =
      "oracle = synthetic\nobjective = pl_sine\ndim = 1\nsigma2 = 0.2\ndelta = 0.05\n"
      "bias_fraction = 0.5\nw0 = 1\nalgorithm = tsla\ntsla_auto = true\nepsilon = 0.5\n"
      "repeats = 2\nbase_seed = 3\neval_stride = 1\nout_dir = " + tmp.file("auto") + "\n";
  ExperimentResult result = run_experiment(parse_config(text));
  ASSERT_EQ(result.labels.size(), 1u);
  EXPECT_EQ(result.labels[0], "tsla(auto)");
  // schedule: eta2 = 0.25/(2*8*0.2) = 0.078125, T2 = ceil(8*0.05*0.2/(mu*eta2*0.25))
  const RunTrace& trace = result.runs[0].trace;
  bool has_stage2 = false;
  for (const TraceRecord& r : trace.records) has_stage2 |= r.stage == 2;
  EXPECT_TRUE(has_stage2);
}

TEST(CompareReport, TableAndBoundMarkers) {
  SummaryRow row;
  row.algorithm = "baseline";
  row.repeats = 3;
  row.final_objective_mean = 0.5;
  row.final_objective_std = 0.1;
  row.stationarity_mean = 0.2;
  row.stationarity_std = 0.01;
  std::string table = compare_report({row}, {});
  EXPECT_NE(table.find("baseline"), std::string::npos);
  EXPECT_NE(table.find("+-"), std::string::npos);
  EXPECT_EQ(table.find("PASS"), std::string::npos);

  std::vector<BoundCheck> checks = {{"measured vs bound", 0.18, 0.22, true},
                                    {"floor stays above eps2", 0.01, 0.04, false}};
  std::string with_checks = compare_report({row}, checks);
  EXPECT_NE(with_checks.find("PASS"), std::string::npos);
  EXPECT_NE(with_checks.find("FAIL"), std::string::npos);
  EXPECT_THROW(compare_report({}, {}), InvalidInputError);
}

TEST(RunVerification, SmoothedMomentPassesOnBothOracleKinds) {
  TempDir tmp;
  ExperimentConfig syn = parse_config(synthetic_text(
      tmp.file("vs"), "verify_target = smoothed_moment\nmc_draws = 20000\n"));
  VerifyOutcome a = run_verification(syn);
  EXPECT_TRUE(a.pass);
  EXPECT_GT(a.std_error, 0.0);
  EXPECT_NE(a.report.find("result = PASS"), std::string::npos);
  EXPECT_TRUE(fs::exists(tmp.file("vs/verify_report.txt")));

  ExperimentConfig cls = parse_config(classification_text(
      tmp.file("vc"), "verify_target = smoothed_moment\n"));
  VerifyOutcome b = run_verification(cls);
  EXPECT_TRUE(b.pass);
  EXPECT_DOUBLE_EQ(b.std_error, 0.0);  // exact enumeration
}

TEST(RunVerification, LsrBoundTargetPassesOnEasyProblem) {
  TempDir tmp;
  std::string text =
      "oracle = synthetic\nobjective = pl_sine\ndim = 1\nsigma2 = 0.2\ndelta = 0.05\n"
      "bias_fraction = 0.5\nw0 = 1\nalgorithm = lsr\ntheta = 0.3\neta = 0.125\niters = 1\n"
      "repeats = 20\nbase_seed = 11\nepsilon = 0.5\nverify_target = lsr_bound\n"
      "out_dir = " + tmp.file("v") + "\n";
  VerifyOutcome outcome = run_verification(parse_config(text));
  EXPECT_EQ(outcome.target, "lsr_bound");
  EXPECT_TRUE(outcome.pass);
  EXPECT_LE(outcome.measured, outcome.bound);
  EXPECT_NE(outcome.report.find("T = "), std::string::npos);
}

TEST(RunVerification, RequiresTargetAndSyntheticOracleWhereNeeded) {
  TempDir tmp;
  EXPECT_THROW(run_verification(parse_config(synthetic_text(tmp.file("x")))), ConfigError);
  ExperimentConfig cls = parse_config(classification_text(
      tmp.file("y"), "verify_target = two_stage\n"));
  EXPECT_THROW(run_verification(cls), ConfigError);
  // bias_floor in the converging regime is a configuration error
  ExperimentConfig floor_cfg = parse_config(
      "oracle = synthetic\nobjective = pl_sine\ndim = 1\nsigma2 = 0.2\ndelta = 0.001\n"
      "w0 = 1\nalgorithm = lsr\ntheta = 0.3\neta = 0.125\niters = 1\nrepeats = 3\n"
      "epsilon = 0.5\nverify_target = bias_floor\nout_dir = " + tmp.file("z") + "\n");
  EXPECT_THROW(run_verification(floor_cfg), ConfigError);
}

TEST(RunEstimation, SyntheticConstantsAreAnalytic) {
  TempDir tmp;
  ExperimentConfig cfg = parse_config(synthetic_text(tmp.file("est"), "mc_draws = 20000\n"));
  std::string text = run_estimation(cfg);
  EXPECT_NE(text.find("L = 8"), std::string::npos);
  EXPECT_NE(text.find("mu = 0.17553098588061242"), std::string::npos);
  EXPECT_NE(text.find("f_star_provenance = exact"), std::string::npos);
  EXPECT_NE(text.find("combination_bound"), std::string::npos);
  EXPECT_TRUE(fs::exists(tmp.file("est/constants.txt")));
  EXPECT_EQ(read_file(tmp.file("est/constants.txt")), text);
}

TEST(RunEstimation, ClassificationConstantsAreMeasured) {
  TempDir tmp;
  ExperimentConfig cfg = parse_config(classification_text(
      tmp.file("est"), "estimate_samples = 50\nestimate_probes = 20\nregion_radius = 0.5\n"));
  std::string text = run_estimation(cfg);
  EXPECT_NE(text.find("f_star_provenance = best_found"), std::string::npos);
  EXPECT_NE(text.find("sigma2_hat"), std::string::npos);
  EXPECT_NE(text.find("delta_hat"), std::string::npos);
  // teacher smoothing without stored teacher labels cannot be estimated
  ExperimentConfig teacher = cfg;
  teacher.source = "teacher";
  EXPECT_THROW(run_estimation(teacher), ConfigError);
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(LSOPT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodesFollowErrorCategories) {
  TempDir tmp;
  std::string good = tmp.write("good.cfg", synthetic_text(tmp.file("out")));
  EXPECT_EQ(run_cli("run " + good), 0);

  std::string bad_key = tmp.write("bad.cfg", synthetic_text(tmp.file("out"), "wat = 1\n"));
  EXPECT_EQ(run_cli("run " + bad_key), 2);

  // a config with a sweep must go through the sweep subcommand
  std::string sweep = tmp.write("sweep.cfg",
                                synthetic_text(tmp.file("out"), "sweep_theta = 0.1,0.2\n"));
  EXPECT_EQ(run_cli("run " + sweep), 2);
  EXPECT_EQ(run_cli("sweep " + sweep), 0);
  EXPECT_EQ(run_cli("sweep " + good), 2);

  // tsla_auto with delta = 0 cannot derive a schedule
  std::string degenerate = tmp.write(
      "degen.cfg",
      "oracle = synthetic\nobjective = pl_sine\ndim = 1\nsigma2 = 1\ndelta = 0\nw0 = 3\n"
      "algorithm = tsla\ntsla_auto = true\nepsilon = 0.2\nout_dir = " + tmp.file("d") + "\n");
  EXPECT_EQ(run_cli("run " + degenerate), 4);

  EXPECT_EQ(run_cli("report " + tmp.file("nonexistent.csv")), 3);
  EXPECT_EQ(run_cli("report " + tmp.file("out/summary.csv")), 0);
  EXPECT_EQ(run_cli("estimate " + good), 0);
  EXPECT_EQ(run_cli("bogus_subcommand"), 2);
}

TEST(Cli, VerifyFailureExitsWithCodeFive) {
  TempDir tmp;
  // delta sits just above the floor threshold, so the regime is the floor one,
  // but the actual bias is far too small to keep the iterates above eps^2
  std::string cfg = tmp.write(
      "vfail.cfg",
      "oracle = synthetic\nobjective = pl_sine\ndim = 1\nsigma2 = 0.2\ndelta = 1.02\n"
      "bias_fraction = 0\nw0 = 1\nalgorithm = lsr\ntheta = 0.3\neta = 0.125\niters = 1\n"
      "repeats = 5\nbase_seed = 2\nepsilon = 0.9\nverify_target = bias_floor\n"
      "out_dir = " + tmp.file("vf") + "\n");
  EXPECT_EQ(run_cli("verify " + cfg), 5);

  std::string ok = tmp.write(
      "vok.cfg", synthetic_text(tmp.file("vo"), "verify_target = smoothed_moment\n"
                                                "mc_draws = 20000\n"));
  EXPECT_EQ(run_cli("verify " + ok), 0);
}

}  // namespace
}  // namespace lsopt
