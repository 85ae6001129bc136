#include "lsopt/optimizer.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lsopt/errors.hpp"

namespace lsopt {

void SgdConfig::validate() const {
  if (!(eta > 0.0)) throw InvalidInputError("learning rate eta must be > 0");
  if (T < 0) throw InvalidInputError("iteration count T must be >= 0");
  if (eval_stride < 1) throw InvalidInputError("eval_stride must be >= 1");
  if (w0.size() < 1) throw InvalidInputError("starting point w0 is empty");
  smoothing.validate();
}

void TslaSchedule::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw InvalidInputError("two-stage schedule needs theta in (0,1)");
  }
  if (!(eta1 > 0.0)) throw InvalidInputError("eta1 must be > 0");
  if (!(eta2 > 0.0)) throw InvalidInputError("eta2 must be > 0");
  if (T1 < 0) throw InvalidInputError("T1 must be >= 0");
  if (T2 < 1) throw InvalidInputError("T2 must be >= 1");
}

void RunTrace::validate() const {
  if (records.empty()) throw InvalidInputError("trace has no records");
  if (records.front().t != 0) throw InvalidInputError("trace must start at t = 0");
  for (size_t i = 0; i < records.size(); ++i) {
    const TraceRecord& r = records[i];
    if (r.stage != 1 && r.stage != 2) throw InvalidInputError("trace stage must be 1 or 2");
    if (!(r.grad_norm_sq >= 0.0)) throw InvalidInputError("grad_norm_sq must be >= 0");
    if (i > 0) {
      if (records[i - 1].t >= r.t) throw InvalidInputError("trace t must be strictly increasing");
      if (records[i - 1].stage > r.stage) throw InvalidInputError("trace stage must not decrease");
    }
  }
}

Eigen::VectorXd sgd_step(const Eigen::VectorXd& w, const Eigen::VectorXd& g, double eta) {
  if (w.size() != g.size()) throw InvalidInputError("sgd_step: dimension mismatch");
  if (!(eta > 0.0)) throw InvalidInputError("sgd_step: eta must be > 0");
  return w - eta * g;
}

namespace {

struct Phase {
  LabelMode mode;
  double eta = 0.0;
  long long steps = 0;
};

RunTrace run_phases(const Oracle& oracle, const Eigen::VectorXd& w0,
                    const std::vector<Phase>& phases, int eval_stride, RngStream& index_rng,
                    RngStream& noise_rng, const StepObserver& observer) {
  if (w0.size() != oracle.dim()) {
    throw InvalidInputError("starting point dimension does not match oracle");
  }
  long long total = 0;
  for (const Phase& p : phases) total += p.steps;
  // an empty second phase contributes no stage-2 region
  const long long stage2_start =
      phases.size() == 2 && phases[1].steps > 0 ? phases[0].steps : total + 1;

  RunTrace trace;
  trace.eval_stride = eval_stride;
  Eigen::VectorXd w = w0;

  auto record = [&](long long t) {
    int stage = t >= stage2_start ? 2 : 1;
    trace.records.push_back({t, stage, oracle.objective(w), oracle.gradient(w).squaredNorm()});
    if (observer) observer(t, stage, w);
  };

  record(0);
  long long t = 0;
  for (const Phase& p : phases) {
    for (long long i = 0; i < p.steps; ++i) {
      Eigen::VectorXd g = oracle.stochastic_gradient(w, p.mode, index_rng, noise_rng);
      w = sgd_step(w, g, p.eta);
      ++t;
      if (t % eval_stride == 0 || t == total) record(t);
    }
  }
  trace.final_params = std::move(w);
  return trace;
}

}  // namespace

RunTrace run_sgd_lsr(const Oracle& oracle, const SgdConfig& config, const StepObserver& observer) {
  config.validate();
  // theta = 0 is exactly the one-hot baseline; collapsing the mode keeps the
  // two code paths (and their random-stream consumption) identical.
  LabelMode mode = config.smoothing.theta == 0.0 ? LabelMode::one_hot()
                                                 : LabelMode::smoothed(config.smoothing);
  RngStream index_rng(config.seed, 0);
  RngStream noise_rng(config.seed, 1);
  return run_phases(oracle, config.w0, {{mode, config.eta, config.T}}, config.eval_stride,
                    index_rng, noise_rng, observer);
}

RunTrace run_tsla(const Oracle& oracle, const TslaSchedule& schedule, SmoothingSource source,
                  const Eigen::VectorXd& w0, int eval_stride, std::uint64_t seed,
                  const StepObserver& observer) {
  if (eval_stride < 1) throw InvalidInputError("eval_stride must be >= 1");
  // deliberately weaker than TslaSchedule::validate(): T2 = 0 is allowed here so
  // the degenerate single-stage reductions can be exercised directly
  if (schedule.T1 < 0 || schedule.T2 < 0) {
    throw InvalidInputError("stage lengths must be >= 0");
  }
  if (schedule.T1 + schedule.T2 < 1) throw InvalidInputError("schedule has no iterations");
  if (!(schedule.eta1 > 0.0) || !(schedule.eta2 > 0.0)) {
    throw InvalidInputError("stage rates must be > 0");
  }
  SmoothingSpec spec;
  spec.theta = schedule.theta;
  spec.source = source;
  spec.validate();
  RngStream index_rng(seed, 0);
  RngStream noise_rng(seed, 1);
  std::vector<Phase> phases{{LabelMode::smoothed(spec), schedule.eta1, schedule.T1},
                            {LabelMode::one_hot(), schedule.eta2, schedule.T2}};
  return run_phases(oracle, w0, phases, eval_stride, index_rng, noise_rng, observer);
}

double random_iterate_stationarity(const std::vector<RunTrace>& traces,
                                   StationarityRange range) {
  if (traces.empty()) throw InvalidInputError("no traces given");
  double mean_sum = 0.0;
  for (const RunTrace& trace : traces) {
    trace.validate();
    const long long total = trace.total_T();
    long long range_start = 0;
    if (range == StationarityRange::kSecondStage) {
      range_start = -1;
      for (const TraceRecord& r : trace.records) {
        if (r.stage == 2) {
          range_start = r.t;
          break;
        }
      }
      if (range_start < 0 || range_start >= total) {
        throw InvalidInputError("trace has no second-stage iterations before the final iterate");
      }
    }
    if (total <= range_start) throw InvalidInputError("requested range is empty");

    double sum = 0.0;
    long long expected = range_start;
    for (const TraceRecord& r : trace.records) {
      if (r.t < range_start || r.t >= total) continue;
      if (r.t != expected) {
        throw InvalidInputError("range not recorded at stride 1 (missing t = " +
                                std::to_string(expected) + ")");
      }
      sum += r.grad_norm_sq;
      ++expected;
    }
    if (expected != total) {
      throw InvalidInputError("range not recorded at stride 1 (missing t = " +
                              std::to_string(expected) + ")");
    }
    mean_sum += sum / static_cast<double>(total - range_start);
  }
  return mean_sum / static_cast<double>(traces.size());
}

void write_trace_csv(const std::string& path, const RunTrace& trace) {
  trace.validate();
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot open '" + path + "' for writing");
  out << "t,stage,objective,grad_norm_sq\n";
  char buf[128];
  for (const TraceRecord& r : trace.records) {
    std::snprintf(buf, sizeof(buf), "%lld,%d,%.17g,%.17g\n", r.t, r.stage, r.objective,
                  r.grad_norm_sq);
    out << buf;
  }
  if (!out) throw InvalidInputError("failed writing '" + path + "'");
}

RunTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line != "t,stage,objective,grad_norm_sq") {
    throw ParseError("bad trace header", 1, "header");
  }
  RunTrace trace;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    TraceRecord r;
    if (std::sscanf(line.c_str(), "%lld,%d,%lg,%lg", &r.t, &r.stage, &r.objective,
                    &r.grad_norm_sq) != 4) {
      throw ParseError("bad trace row", lineno, "record");
    }
    trace.records.push_back(r);
  }
  if (trace.records.size() >= 2) {
    trace.eval_stride = static_cast<int>(trace.records[1].t - trace.records[0].t);
  }
  trace.validate();
  return trace;
}

}  // namespace lsopt
