#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lsopt/oracle.hpp"

namespace lsopt {

// One SGD run: T steps of w <- w - eta * g with labels smoothed by
// `smoothing` (theta = 0 is the plain one-hot baseline).
struct SgdConfig {
  double eta = 0.1;
  long long T = 0;
  SmoothingSpec smoothing;
  std::uint64_t seed = 0;
  Eigen::VectorXd w0;
  int eval_stride = 1;

  void validate() const;
};

// Stage sizes and step sizes of the two-stage schedule: T1 smoothed steps at
// eta1, then T2 one-hot steps at eta2 from the stage-1 final iterate.
struct TslaSchedule {
  double theta = 0.0;
  double eta1 = 0.0;
  long long T1 = 0;
  double eta2 = 0.0;
  long long T2 = 0;

  void validate() const;
};

struct TraceRecord {
  long long t = 0;
  int stage = 1;
  double objective = 0.0;
  double grad_norm_sq = 0.0;
};

// Exact objective and squared full-gradient norm along a run, recorded at
// t = 0, every multiple of eval_stride, and the final iterate.
struct RunTrace {
  std::vector<TraceRecord> records;
  Eigen::VectorXd final_params;
  int eval_stride = 1;

  long long total_T() const { return records.empty() ? 0 : records.back().t; }
  void validate() const;
};

// Called at every recorded iterate; lets callers track extra per-point
// metrics (e.g. held-out accuracy) without widening the trace schema.
using StepObserver = std::function<void(long long t, int stage, const Eigen::VectorXd& w)>;

Eigen::VectorXd sgd_step(const Eigen::VectorXd& w, const Eigen::VectorXd& g, double eta);

RunTrace run_sgd_lsr(const Oracle& oracle, const SgdConfig& config,
                     const StepObserver& observer = {});

RunTrace run_tsla(const Oracle& oracle, const TslaSchedule& schedule, SmoothingSource source,
                  const Eigen::VectorXd& w0, int eval_stride, std::uint64_t seed,
                  const StepObserver& observer = {});

enum class StationarityRange { kAll, kSecondStage };

// Monte-Carlo estimate of the random-iterate stationarity measure: the mean
// of grad_norm_sq over every iteration in the range (the final iterate is
// excluded; a uniformly random R ranges over starting iterates only), averaged
// over the given repeats. Requires the range recorded at stride 1.
double random_iterate_stationarity(const std::vector<RunTrace>& traces, StationarityRange range);

// CSV round trip with columns t,stage,objective,grad_norm_sq at 17
// significant digits.
void write_trace_csv(const std::string& path, const RunTrace& trace);
RunTrace read_trace_csv(const std::string& path);

}  // namespace lsopt
