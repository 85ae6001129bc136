#include "lsopt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "lsopt/classification.hpp"
#include "lsopt/errors.hpp"
#include "lsopt/parallel.hpp"
#include "lsopt/synthetic.hpp"

namespace lsopt {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, int line, const std::string& key) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ParseError("expected a real number, got '" + v + "'", line, key);
  }
}

long long parse_ll(const std::string& v, int line, const std::string& key) {
  try {
    size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ParseError("expected an integer, got '" + v + "'", line, key);
  }
}

int parse_int(const std::string& v, int line, const std::string& key) {
  long long x = parse_ll(v, line, key);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ParseError("integer out of range", line, key);
  }
  return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& v, int line, const std::string& key) {
  try {
    size_t pos = 0;
    unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ParseError("expected a nonnegative integer, got '" + v + "'", line, key);
  }
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ParseError("expected true or false, got '" + v + "'", line, key);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> items;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, ',')) items.push_back(trim(cur));
  return items;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;

  using Handler = std::function<void(const std::string&, int)>;
  const std::map<std::string, Handler> handlers{
      {"oracle", [&](const std::string& v, int) { cfg.oracle = v; }},
      {"objective", [&](const std::string& v, int) { cfg.objective = v; }},
      {"dim", [&](const std::string& v, int l) { cfg.dim = parse_int(v, l, "dim"); }},
      {"sigma2", [&](const std::string& v, int l) { cfg.sigma2 = parse_double(v, l, "sigma2"); }},
      {"delta", [&](const std::string& v, int l) { cfg.delta = parse_double(v, l, "delta"); }},
      {"bias_fraction",
       [&](const std::string& v, int l) { cfg.bias_fraction = parse_double(v, l, "bias_fraction"); }},
      {"quad_curvature",
       [&](const std::string& v, int l) { cfg.quad_curvature = parse_double(v, l, "quad_curvature"); }},
      {"w0", [&](const std::string& v, int l) { cfg.w0 = parse_double(v, l, "w0"); }},
      {"dataset_path", [&](const std::string& v, int) { cfg.dataset_path = v; }},
      {"gen_K", [&](const std::string& v, int l) { cfg.gen_K = parse_int(v, l, "gen_K"); }},
      {"gen_d", [&](const std::string& v, int l) { cfg.gen_d = parse_int(v, l, "gen_d"); }},
      {"gen_n", [&](const std::string& v, int l) { cfg.gen_n = parse_int(v, l, "gen_n"); }},
      {"gen_separation",
       [&](const std::string& v, int l) { cfg.gen_separation = parse_double(v, l, "gen_separation"); }},
      {"gen_label_noise",
       [&](const std::string& v, int l) { cfg.gen_label_noise = parse_double(v, l, "gen_label_noise"); }},
      {"gen_seed", [&](const std::string& v, int l) { cfg.gen_seed = parse_u64(v, l, "gen_seed"); }},
      {"holdout", [&](const std::string& v, int l) { cfg.holdout = parse_int(v, l, "holdout"); }},
      {"model", [&](const std::string& v, int) { cfg.model = v; }},
      {"hidden", [&](const std::string& v, int l) { cfg.hidden = parse_int(v, l, "hidden"); }},
      {"algorithm", [&](const std::string& v, int) { cfg.algorithm = v; }},
      {"theta", [&](const std::string& v, int l) { cfg.theta = parse_double(v, l, "theta"); }},
      {"source", [&](const std::string& v, int) { cfg.source = v; }},
      {"eta", [&](const std::string& v, int l) { cfg.eta = parse_double(v, l, "eta"); }},
      {"iters", [&](const std::string& v, int l) { cfg.iters = parse_ll(v, l, "iters"); }},
      {"epochs", [&](const std::string& v, int l) { cfg.epochs = parse_int(v, l, "epochs"); }},
      {"eta1", [&](const std::string& v, int l) { cfg.eta1 = parse_double(v, l, "eta1"); }},
      {"eta2", [&](const std::string& v, int l) { cfg.eta2 = parse_double(v, l, "eta2"); }},
      {"T1", [&](const std::string& v, int l) { cfg.T1 = parse_ll(v, l, "T1"); }},
      {"drop_epoch",
       [&](const std::string& v, int l) { cfg.drop_epoch = parse_int(v, l, "drop_epoch"); }},
      {"stage_lr_divisor",
       [&](const std::string& v, int l) {
         cfg.stage_lr_divisor = parse_double(v, l, "stage_lr_divisor");
       }},
      {"tsla_auto", [&](const std::string& v, int l) { cfg.tsla_auto = parse_bool(v, l, "tsla_auto"); }},
      {"epsilon", [&](const std::string& v, int l) { cfg.epsilon = parse_double(v, l, "epsilon"); }},
      {"repeats", [&](const std::string& v, int l) { cfg.repeats = parse_int(v, l, "repeats"); }},
      {"base_seed", [&](const std::string& v, int l) { cfg.base_seed = parse_u64(v, l, "base_seed"); }},
      {"sweep_s",
       [&](const std::string& v, int l) {
         cfg.sweep_s.clear();
         for (const std::string& item : split_list(v)) {
           cfg.sweep_s.push_back(parse_ll(item, l, "sweep_s"));
         }
         if (cfg.sweep_s.empty()) throw ParseError("empty list", l, "sweep_s");
       }},
      {"sweep_theta",
       [&](const std::string& v, int l) {
         cfg.sweep_theta.clear();
         for (const std::string& item : split_list(v)) {
           cfg.sweep_theta.push_back(parse_double(item, l, "sweep_theta"));
         }
         if (cfg.sweep_theta.empty()) throw ParseError("empty list", l, "sweep_theta");
       }},
      {"eval_stride",
       [&](const std::string& v, int l) { cfg.eval_stride = parse_int(v, l, "eval_stride"); }},
      {"out_dir", [&](const std::string& v, int) { cfg.out_dir = v; }},
      {"verify_target", [&](const std::string& v, int) { cfg.verify_target = v; }},
      {"mc_draws", [&](const std::string& v, int l) { cfg.mc_draws = parse_ll(v, l, "mc_draws"); }},
      {"estimate_samples",
       [&](const std::string& v, int l) {
         cfg.estimate_samples = parse_int(v, l, "estimate_samples");
       }},
      {"estimate_probes",
       [&](const std::string& v, int l) { cfg.estimate_probes = parse_int(v, l, "estimate_probes"); }},
      {"region_radius",
       [&](const std::string& v, int l) { cfg.region_radius = parse_double(v, l, "region_radius"); }},
  };

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected 'key = value'", lineno, "");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("missing key before '='", lineno, "");
    auto it = handlers.find(key);
    if (it == handlers.end()) throw ParseError("unknown key", lineno, key);
    if (!seen.insert(key).second) throw ParseError("duplicate key", lineno, key);
    if (value.empty()) throw ParseError("missing value", lineno, key);
    it->second(value, lineno);
  }

  std::sort(cfg.sweep_s.begin(), cfg.sweep_s.end());
  std::sort(cfg.sweep_theta.begin(), cfg.sweep_theta.end());
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& msg) {
  throw ParseError(msg, 0, key);
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
  const bool synthetic = cfg.oracle == "synthetic";
  const bool classification = cfg.oracle == "classification";
  if (!synthetic && !classification) {
    config_error("oracle", "must be 'synthetic' or 'classification'");
  }

  if (synthetic) {
    if (cfg.objective != "pl_sine" && cfg.objective != "shifted_quadratic") {
      config_error("objective", "must be 'pl_sine' or 'shifted_quadratic'");
    }
    if (cfg.dim < 1) config_error("dim", "must be >= 1");
    if (!(cfg.sigma2 >= 0.0)) config_error("sigma2", "must be >= 0");
    if (!(cfg.delta >= 0.0)) config_error("delta", "must be >= 0");
    if (!(cfg.bias_fraction >= 0.0 && cfg.bias_fraction <= 1.0)) {
      config_error("bias_fraction", "must lie in [0,1]");
    }
    if (cfg.objective == "shifted_quadratic" && !(cfg.quad_curvature > 0.0)) {
      config_error("quad_curvature", "must be > 0");
    }
    if (cfg.epochs != 0) config_error("epochs", "applies to classification oracles; use iters");
    if (cfg.drop_epoch != -1) config_error("drop_epoch", "applies to classification oracles; use T1");
    if (cfg.holdout != 0) config_error("holdout", "applies to classification oracles");
    if (!cfg.dataset_path.empty()) config_error("dataset_path", "applies to classification oracles");
  } else {
    if (cfg.model != "softmax_linear" && cfg.model != "mlp") {
      config_error("model", "must be 'softmax_linear' or 'mlp'");
    }
    if (cfg.model == "mlp" && cfg.hidden < 1) config_error("hidden", "must be >= 1");
    if (cfg.epochs < 1) config_error("epochs", "must be >= 1 for classification oracles");
    if (cfg.iters != 0) config_error("iters", "applies to synthetic oracles; use epochs");
    if (cfg.T1 != -1) config_error("T1", "applies to synthetic oracles; use drop_epoch");
    if (cfg.sigma2 != 0.0) config_error("sigma2", "applies to synthetic oracles");
    if (cfg.delta != 0.0) config_error("delta", "applies to synthetic oracles");
    if (cfg.bias_fraction != 0.0) config_error("bias_fraction", "applies to synthetic oracles");
    if (cfg.tsla_auto) config_error("tsla_auto", "needs the analytic constants of a synthetic oracle");
    if (cfg.holdout < 0) config_error("holdout", "must be >= 0");
    if (cfg.dataset_path.empty()) {
      if (cfg.gen_K < 2) config_error("gen_K", "must be >= 2");
      if (cfg.gen_d < 1) config_error("gen_d", "must be >= 1");
      if (cfg.gen_n < cfg.gen_K) config_error("gen_n", "must be >= gen_K");
      if (!(cfg.gen_separation >= 0.0)) config_error("gen_separation", "must be >= 0");
      if (!(cfg.gen_label_noise >= 0.0 && cfg.gen_label_noise < 1.0)) {
        config_error("gen_label_noise", "must lie in [0,1)");
      }
      if (cfg.holdout >= cfg.gen_n) config_error("holdout", "must leave at least one training example");
    }
  }

  const bool baseline = cfg.algorithm == "baseline";
  const bool lsr = cfg.algorithm == "lsr";
  const bool tsla = cfg.algorithm == "tsla";
  if (!baseline && !lsr && !tsla) {
    config_error("algorithm", "must be 'baseline', 'lsr', or 'tsla'");
  }
  if (cfg.source != "uniform" && cfg.source != "teacher") {
    config_error("source", "must be 'uniform' or 'teacher'");
  }

  const long long budget = synthetic ? cfg.iters : static_cast<long long>(cfg.epochs);
  if (!tsla) {
    if (!(cfg.eta > 0.0)) config_error("eta", "must be > 0");
    if (synthetic && cfg.iters < 1) config_error("iters", "must be >= 1");
    if (cfg.eta1 != 0.0 || cfg.eta2 != 0.0 || cfg.T1 != -1 || cfg.drop_epoch != -1 ||
        cfg.tsla_auto || !cfg.sweep_s.empty()) {
      config_error("algorithm", "two-stage keys given for a single-stage algorithm");
    }
    if (cfg.stage_lr_divisor != 1.0) {
      config_error("stage_lr_divisor", "applies to the tsla algorithm");
    }
  }
  if (baseline && cfg.theta != 0.0) config_error("theta", "must be 0 for the baseline");
  if (baseline && !cfg.sweep_theta.empty()) {
    config_error("sweep_theta", "applies to the lsr algorithm");
  }
  if (lsr) {
    if (!(cfg.theta >= 0.0 && cfg.theta < 1.0)) config_error("theta", "must lie in [0,1)");
    for (double t : cfg.sweep_theta) {
      if (!(t >= 0.0 && t < 1.0)) config_error("sweep_theta", "values must lie in [0,1)");
    }
  }
  if (tsla) {
    if (!cfg.sweep_theta.empty()) config_error("sweep_theta", "applies to the lsr algorithm");
    if (!(cfg.stage_lr_divisor >= 1.0)) config_error("stage_lr_divisor", "must be >= 1");
    if (cfg.tsla_auto) {
      if (!synthetic) config_error("tsla_auto", "needs a synthetic oracle");
      if (cfg.theta != 0.0) config_error("theta", "is derived when tsla_auto is set");
      if (cfg.eta1 != 0.0 || cfg.eta2 != 0.0) {
        config_error("eta1", "stage rates are derived when tsla_auto is set");
      }
      if (cfg.T1 != -1 || !cfg.sweep_s.empty()) {
        config_error("T1", "stage lengths are derived when tsla_auto is set");
      }
      if (cfg.iters != 0) config_error("iters", "the budget is derived when tsla_auto is set");
      if (!(cfg.epsilon > 0.0)) config_error("epsilon", "must be > 0");
    } else {
      if (!(cfg.theta > 0.0 && cfg.theta < 1.0)) config_error("theta", "must lie in (0,1) for tsla");
      if (synthetic && cfg.iters < 1) config_error("iters", "must be >= 1");
      int given = 0;
      if (cfg.T1 >= 0) ++given;
      if (cfg.drop_epoch >= 0) ++given;
      if (!cfg.sweep_s.empty()) ++given;
      if (given != 1) {
        config_error("T1", "give exactly one of T1, drop_epoch, or sweep_s for tsla");
      }
      if (!(cfg.eta1 > 0.0) && !(cfg.eta > 0.0)) config_error("eta1", "must be > 0");
      if (cfg.eta2 < 0.0) config_error("eta2", "must be >= 0");
      if (cfg.T1 >= 0 && cfg.T1 > budget) config_error("T1", "exceeds the iteration budget");
      if (cfg.drop_epoch >= 0 && cfg.drop_epoch > cfg.epochs) {
        config_error("drop_epoch", "exceeds the epoch budget");
      }
      for (long long s : cfg.sweep_s) {
        if (s < 0) config_error("sweep_s", "values must be >= 0");
        if (s > budget) config_error("sweep_s", "value exceeds the iteration budget");
      }
    }
  }

  if (cfg.repeats < 1) config_error("repeats", "must be >= 1");
  if (cfg.eval_stride < 0) config_error("eval_stride", "must be >= 0");
  if (cfg.out_dir.empty()) config_error("out_dir", "must not be empty");
  if (!(cfg.epsilon > 0.0)) config_error("epsilon", "must be > 0");
  if (cfg.mc_draws < 1000) config_error("mc_draws", "must be >= 1000");
  if (cfg.estimate_samples < 2) config_error("estimate_samples", "must be >= 2");
  if (cfg.estimate_probes < 1) config_error("estimate_probes", "must be >= 1");
  if (!(cfg.region_radius > 0.0)) config_error("region_radius", "must be > 0");
  static const std::set<std::string> targets{"",
                                             "lsr_bound",
                                             "bias_floor",
                                             "baseline_bound",
                                             "two_stage",
                                             "smoothed_moment"};
  if (!targets.count(cfg.verify_target)) {
    config_error("verify_target", "unknown verification target '" + cfg.verify_target + "'");
  }
}

std::string config_to_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  auto kv = [&](const char* key, const std::string& v) { out << key << " = " << v << "\n"; };
  auto kvd = [&](const char* key, double v) { kv(key, format_real(v)); };
  auto kvi = [&](const char* key, long long v) { kv(key, std::to_string(v)); };

  kv("oracle", cfg.oracle);
  if (cfg.oracle == "synthetic") {
    kv("objective", cfg.objective);
    kvi("dim", cfg.dim);
    kvd("sigma2", cfg.sigma2);
    kvd("delta", cfg.delta);
    kvd("bias_fraction", cfg.bias_fraction);
    if (cfg.objective == "shifted_quadratic") kvd("quad_curvature", cfg.quad_curvature);
    kvd("w0", cfg.w0);
  } else {
    if (!cfg.dataset_path.empty()) {
      kv("dataset_path", cfg.dataset_path);
    } else {
      kvi("gen_K", cfg.gen_K);
      kvi("gen_d", cfg.gen_d);
      kvi("gen_n", cfg.gen_n);
      kvd("gen_separation", cfg.gen_separation);
      kvd("gen_label_noise", cfg.gen_label_noise);
      kvi("gen_seed", static_cast<long long>(cfg.gen_seed));
    }
    kvi("holdout", cfg.holdout);
    kv("model", cfg.model);
    if (cfg.model == "mlp") kvi("hidden", cfg.hidden);
  }

  kv("algorithm", cfg.algorithm);
  kv("source", cfg.source);
  if (cfg.algorithm == "baseline") {
    kvd("eta", cfg.eta);
  } else if (cfg.algorithm == "lsr") {
    kvd("theta", cfg.theta);
    kvd("eta", cfg.eta);
    if (!cfg.sweep_theta.empty()) {
      std::string list;
      for (size_t i = 0; i < cfg.sweep_theta.size(); ++i) {
        if (i) list += ",";
        list += format_real(cfg.sweep_theta[i]);
      }
      kv("sweep_theta", list);
    }
  } else {
    kv("tsla_auto", cfg.tsla_auto ? "true" : "false");
    if (cfg.tsla_auto) {
      kvd("epsilon", cfg.epsilon);
    } else {
      kvd("theta", cfg.theta);
      kvd("eta", cfg.eta);
      kvd("eta1", cfg.eta1);
      kvd("eta2", cfg.eta2);
      kvd("stage_lr_divisor", cfg.stage_lr_divisor);
      if (cfg.T1 >= 0) kvi("T1", cfg.T1);
      if (cfg.drop_epoch >= 0) kvi("drop_epoch", cfg.drop_epoch);
      if (!cfg.sweep_s.empty()) {
        std::string list;
        for (size_t i = 0; i < cfg.sweep_s.size(); ++i) {
          if (i) list += ",";
          list += std::to_string(cfg.sweep_s[i]);
        }
        kv("sweep_s", list);
      }
    }
  }
  if (cfg.oracle == "synthetic") {
    if (!(cfg.algorithm == "tsla" && cfg.tsla_auto)) kvi("iters", cfg.iters);
  } else {
    kvi("epochs", cfg.epochs);
  }

  kvi("repeats", cfg.repeats);
  kvi("base_seed", static_cast<long long>(cfg.base_seed));
  kvi("eval_stride", cfg.eval_stride);
  kv("out_dir", cfg.out_dir);
  if (!cfg.verify_target.empty()) kv("verify_target", cfg.verify_target);
  if (!(cfg.algorithm == "tsla" && cfg.tsla_auto)) kvd("epsilon", cfg.epsilon);
  kvi("mc_draws", cfg.mc_draws);
  kvi("estimate_samples", cfg.estimate_samples);
  kvi("estimate_probes", cfg.estimate_probes);
  kvd("region_radius", cfg.region_radius);
  return out.str();
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::string out =
      "algorithm,repeats,final_objective_mean,final_objective_std,final_accuracy_mean,"
      "final_accuracy_std,stationarity_mean,stationarity_std\n";
  for (const SummaryRow& r : rows) {
    out += r.algorithm + "," + std::to_string(r.repeats) + "," +
           format_real(r.final_objective_mean) + "," + format_real(r.final_objective_std) + ",";
    if (r.has_accuracy) {
      out += format_real(r.final_accuracy_mean) + "," + format_real(r.final_accuracy_std);
    } else {
      out += ",";
    }
    out += "," + format_real(r.stationarity_mean) + "," + format_real(r.stationarity_std) + "\n";
  }
  return out;
}

std::vector<SummaryRow> summary_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "algorithm,repeats,final_objective_mean,final_objective_std,final_accuracy_mean,"
              "final_accuracy_std,stationarity_mean,stationarity_std") {
    throw ParseError("bad summary header", 1, "header");
  }
  std::vector<SummaryRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    if (cells.size() != 8) throw ParseError("expected 8 columns", lineno, "row");
    SummaryRow r;
    r.algorithm = cells[0];
    r.repeats = parse_int(cells[1], lineno, "repeats");
    r.final_objective_mean = parse_double(cells[2], lineno, "final_objective_mean");
    r.final_objective_std = parse_double(cells[3], lineno, "final_objective_std");
    r.has_accuracy = !cells[4].empty();
    if (r.has_accuracy) {
      r.final_accuracy_mean = parse_double(cells[4], lineno, "final_accuracy_mean");
      r.final_accuracy_std = parse_double(cells[5], lineno, "final_accuracy_std");
    }
    r.stationarity_mean = parse_double(cells[6], lineno, "stationarity_mean");
    r.stationarity_std = parse_double(cells[7], lineno, "stationarity_std");
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

struct BuiltOracle {
  std::unique_ptr<Oracle> oracle;
  std::optional<Dataset> holdout;
  Eigen::VectorXd w0;
  long long budget = 0;
  int eval_stride = 1;
  int n_train = 0;
};

BuiltOracle build_oracle(const ExperimentConfig& cfg) {
  BuiltOracle built;
  if (cfg.oracle == "synthetic") {
    SyntheticPLProblem problem =
        cfg.objective == "pl_sine"
            ? SyntheticPLProblem::pl_sine(cfg.dim)
            : SyntheticPLProblem::shifted_quadratic(cfg.dim, cfg.quad_curvature,
                                                    Eigen::VectorXd::Zero(cfg.dim));
    NoiseSpec noise{cfg.sigma2, cfg.delta, cfg.bias_fraction};
    built.oracle = std::make_unique<SyntheticOracle>(std::move(problem), noise);
    built.w0 = Eigen::VectorXd::Constant(cfg.dim, cfg.w0);
    built.budget = cfg.iters;
    built.eval_stride = cfg.eval_stride == 0 ? 1 : cfg.eval_stride;
  } else {
    Dataset full = cfg.dataset_path.empty()
                       ? generate_gaussian_mixture(cfg.gen_K, cfg.gen_d, cfg.gen_n,
                                                   cfg.gen_separation, cfg.gen_label_noise,
                                                   cfg.gen_seed)
                       : load_dataset(cfg.dataset_path);
    Dataset train = std::move(full);
    if (cfg.holdout > 0) {
      if (cfg.holdout >= train.n()) {
        throw ConfigError("holdout leaves no training examples");
      }
      auto parts = split_dataset(train, train.n() - cfg.holdout);
      train = std::move(parts.first);
      built.holdout = std::move(parts.second);
    }
    ModelKind kind = cfg.model == "mlp" ? ModelKind::kMlpOneHidden : ModelKind::kSoftmaxLinear;
    built.n_train = train.n();
    built.oracle = std::make_unique<ClassificationOracle>(std::move(train), kind, cfg.hidden);
    built.w0 = Eigen::VectorXd::Zero(built.oracle->dim());
    built.budget = static_cast<long long>(cfg.epochs) * built.n_train;
    built.eval_stride = cfg.eval_stride == 0 ? built.n_train : cfg.eval_stride;
  }
  return built;
}

SmoothingSource parse_source(const std::string& source) {
  return source == "teacher" ? SmoothingSource::kTeacher : SmoothingSource::kUniform;
}

struct RunPlan {
  std::string label;
  bool is_tsla = false;
  SgdConfig sgd;
  TslaSchedule tsla;
};

std::vector<RunPlan> make_plans(const ExperimentConfig& cfg, const BuiltOracle& built) {
  std::vector<RunPlan> plans;
  const SmoothingSource source = parse_source(cfg.source);
  const bool synthetic = cfg.oracle == "synthetic";

  auto sgd_plan = [&](double theta, const std::string& label) {
    RunPlan p;
    p.label = label;
    p.sgd.eta = cfg.eta;
    p.sgd.T = built.budget;
    p.sgd.smoothing.theta = theta;
    p.sgd.smoothing.source = source;
    p.sgd.w0 = built.w0;
    p.sgd.eval_stride = built.eval_stride;
    plans.push_back(std::move(p));
  };

  if (cfg.algorithm == "baseline") {
    sgd_plan(0.0, "baseline");
  } else if (cfg.algorithm == "lsr") {
    std::vector<double> thetas = cfg.sweep_theta;
    std::sort(thetas.begin(), thetas.end());
    if (thetas.empty()) thetas.push_back(cfg.theta);
    for (double t : thetas) sgd_plan(t, "lsr(theta=" + format_short(t) + ")");
  } else if (cfg.tsla_auto) {
    const auto* syn = dynamic_cast<const SyntheticOracle*>(built.oracle.get());
    ProblemConstants constants;
    constants.L = *syn->analytic_smoothness();
    constants.mu = syn->problem().mu;
    constants.sigma2 = cfg.sigma2;
    constants.delta = cfg.delta;
    constants.f_at_w0 = syn->objective(built.w0);
    constants.f_star = syn->problem().f_star;
    RunPlan p;
    p.label = "tsla(auto)";
    p.is_tsla = true;
    p.tsla = tsla_schedule(constants, cfg.epsilon);
    plans.push_back(std::move(p));
  } else {
    std::vector<long long> drops = cfg.sweep_s;
    std::sort(drops.begin(), drops.end());
    if (drops.empty()) drops.push_back(synthetic ? cfg.T1 : cfg.drop_epoch);
    for (long long s : drops) {
      RunPlan p;
      p.is_tsla = true;
      p.tsla.theta = cfg.theta;
      p.tsla.eta1 = cfg.eta1 > 0.0 ? cfg.eta1 : cfg.eta;
      p.tsla.eta2 = cfg.eta2 > 0.0 ? cfg.eta2 : p.tsla.eta1 / cfg.stage_lr_divisor;
      p.tsla.T1 = synthetic ? s : s * built.n_train;
      p.tsla.T2 = built.budget - p.tsla.T1;
      p.label = synthetic ? "tsla(T1=" + std::to_string(s) + ")"
                          : "tsla(s=" + std::to_string(s) + ")";
      p.tsla.validate();
      plans.push_back(std::move(p));
    }
  }
  return plans;
}

double recorded_stationarity(const RunTrace& trace, bool second_stage_only) {
  const long long total = trace.total_T();
  double sum = 0.0;
  long long count = 0;
  for (const TraceRecord& r : trace.records) {
    if (r.t >= total) continue;
    if (second_stage_only && r.stage != 2) continue;
    sum += r.grad_norm_sq;
    ++count;
  }
  if (count == 0) return trace.records.back().grad_norm_sq;
  return sum / static_cast<double>(count);
}

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  sd = 0.0;
  if (v.size() > 1) {
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    sd = std::sqrt(acc / static_cast<double>(v.size() - 1));
  }
}

std::string run_file_name(const char* prefix, size_t sweep, size_t repeat) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03zu_%03zu.csv", prefix, sweep, repeat);
  return buf;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  BuiltOracle built = build_oracle(cfg);
  std::vector<RunPlan> plans = make_plans(cfg, built);
  const auto* cls = dynamic_cast<const ClassificationOracle*>(built.oracle.get());

  ExperimentResult result;
  for (const RunPlan& p : plans) result.labels.push_back(p.label);

  const size_t total_runs = plans.size() * static_cast<size_t>(cfg.repeats);
  result.runs.resize(total_runs);

  parallel_for(static_cast<long long>(total_runs), [&](long long i) {
    const size_t sweep = static_cast<size_t>(i) / cfg.repeats;
    const size_t repeat = static_cast<size_t>(i) % cfg.repeats;
    const RunPlan& plan = plans[sweep];
    const std::uint64_t seed = cfg.base_seed + sweep * static_cast<size_t>(cfg.repeats) + repeat;
    RunOutput& out = result.runs[static_cast<size_t>(i)];

    StepObserver observer;
    if (cls) {
      const bool want_top5 = cls->data().K > 10;
      observer = [&, want_top5](long long t, int, const Eigen::VectorXd& w) {
        Model m = cls->model_at(w);
        double train_acc = top1_accuracy(m, cls->data());
        double hold_acc =
            built.holdout.has_value() ? top1_accuracy(m, *built.holdout) : train_acc;
        out.accuracy.push_back({static_cast<double>(t), train_acc, hold_acc});
        if (want_top5) {
          double train5 = topk_accuracy(m, cls->data(), 5);
          double hold5 =
              built.holdout.has_value() ? topk_accuracy(m, *built.holdout, 5) : train5;
          out.accuracy_top5.push_back({train5, hold5});
        }
      };
    }

    if (plan.is_tsla) {
      out.trace = run_tsla(*built.oracle, plan.tsla, parse_source(cfg.source), built.w0,
                           built.eval_stride, seed, observer);
    } else {
      SgdConfig run_cfg = plan.sgd;
      run_cfg.seed = seed;
      out.trace = run_sgd_lsr(*built.oracle, run_cfg, observer);
    }
    out.final_objective = out.trace.records.back().objective;
    out.stationarity = recorded_stationarity(out.trace, plan.is_tsla);
    if (cls) {
      Model m = cls->model_at(out.trace.final_params);
      out.final_accuracy = built.holdout.has_value() ? top1_accuracy(m, *built.holdout)
                                                     : top1_accuracy(m, cls->data());
    }
  });

  for (size_t sweep = 0; sweep < plans.size(); ++sweep) {
    std::vector<double> finals, accs, stats;
    for (int r = 0; r < cfg.repeats; ++r) {
      const RunOutput& out = result.runs[sweep * cfg.repeats + r];
      finals.push_back(out.final_objective);
      accs.push_back(out.final_accuracy);
      stats.push_back(out.stationarity);
    }
    SummaryRow row;
    row.algorithm = plans[sweep].label;
    row.repeats = cfg.repeats;
    mean_std(finals, row.final_objective_mean, row.final_objective_std);
    row.has_accuracy = cls != nullptr;
    if (row.has_accuracy) mean_std(accs, row.final_accuracy_mean, row.final_accuracy_std);
    mean_std(stats, row.stationarity_mean, row.stationarity_std);
    result.summary.push_back(std::move(row));
  }

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream echo(fs::path(cfg.out_dir) / "config_echo.txt");
    echo << config_to_text(cfg);
  }
  for (size_t sweep = 0; sweep < plans.size(); ++sweep) {
    for (int r = 0; r < cfg.repeats; ++r) {
      const RunOutput& out = result.runs[sweep * cfg.repeats + r];
      fs::path trace_path = fs::path(cfg.out_dir) / run_file_name("trace", sweep, r);
      write_trace_csv(trace_path.string(), out.trace);
      if (cls) {
        const bool top5 = !out.accuracy_top5.empty();
        fs::path acc_path = fs::path(cfg.out_dir) / run_file_name("accuracy", sweep, r);
        std::ofstream acc(acc_path);
        acc << "t,train_accuracy";
        if (built.holdout.has_value()) acc << ",holdout_accuracy";
        if (top5) {
          acc << ",train_top5";
          if (built.holdout.has_value()) acc << ",holdout_top5";
        }
        acc << '\n';
        for (size_t k = 0; k < out.accuracy.size(); ++k) {
          const auto& row = out.accuracy[k];
          acc << static_cast<long long>(row[0]) << ',' << format_real(row[1]);
          if (built.holdout.has_value()) acc << ',' << format_real(row[2]);
          if (top5) {
            acc << ',' << format_real(out.accuracy_top5[k][0]);
            if (built.holdout.has_value()) acc << ',' << format_real(out.accuracy_top5[k][1]);
          }
          acc << '\n';
        }
      }
    }
  }
  {
    std::ofstream sum(fs::path(cfg.out_dir) / "summary.csv");
    sum << summary_to_csv(result.summary);
  }
  return result;
}

std::string compare_report(const std::vector<SummaryRow>& rows,
                           const std::vector<BoundCheck>& checks) {
  if (rows.empty()) throw InvalidInputError("compare_report needs at least one summary row");
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %8s %26s %26s %26s\n", "algorithm", "repeats",
                "final_objective", "final_accuracy", "stationarity");
  out << line;
  for (const SummaryRow& r : rows) {
    std::string obj = format_short(r.final_objective_mean) + " +- " +
                      format_short(r.final_objective_std);
    std::string acc = r.has_accuracy ? format_short(r.final_accuracy_mean) + " +- " +
                                           format_short(r.final_accuracy_std)
                                     : "-";
    std::string st = format_short(r.stationarity_mean) + " +- " +
                     format_short(r.stationarity_std);
    std::snprintf(line, sizeof(line), "%-24s %8d %26s %26s %26s\n", r.algorithm.c_str(),
                  r.repeats, obj.c_str(), acc.c_str(), st.c_str());
    out << line;
  }
  if (!checks.empty()) {
    out << "\nbound checks:\n";
    for (const BoundCheck& c : checks) {
      bool ok = c.expect_less_equal ? c.measured <= c.bound : c.measured > c.bound;
      std::snprintf(line, sizeof(line), "  %-40s measured %-14s %s %-14s %s\n", c.name.c_str(),
                    format_short(c.measured).c_str(), c.expect_less_equal ? "<=" : ">",
                    format_short(c.bound).c_str(), ok ? "PASS" : "FAIL");
      out << line;
    }
  }
  return out.str();
}

namespace {

struct RepeatStats {
  double mean = 0.0;
  double se = 0.0;
};

RepeatStats repeat_stationarity(const std::function<RunTrace(std::uint64_t)>& runner,
                                StationarityRange range, int repeats, std::uint64_t base_seed) {
  std::vector<double> values(repeats);
  parallel_for(repeats, [&](long long r) {
    std::vector<RunTrace> one;
    one.push_back(runner(base_seed + static_cast<std::uint64_t>(r)));
    values[static_cast<size_t>(r)] = random_iterate_stationarity(one, range);
  });
  RepeatStats stats;
  double sd = 0.0;
  mean_std(values, stats.mean, sd);
  stats.se = repeats > 1 ? sd / std::sqrt(static_cast<double>(repeats)) : 0.0;
  return stats;
}

long long ceil_iterations(double x) {
  if (!(x > 0.0)) throw InvalidInputError("iteration count must be positive");
  if (!(x < 9.0e18)) throw InvalidInputError("iteration count overflows the budget");
  return static_cast<long long>(std::ceil(x));
}

}  // namespace

VerifyOutcome run_verification(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.verify_target.empty()) {
    throw ConfigError("verify needs a verify_target key");
  }
  BuiltOracle built = build_oracle(cfg);
  VerifyOutcome outcome;
  outcome.target = cfg.verify_target;
  std::ostringstream report;
  report << "target = " << cfg.verify_target << "\n";

  if (cfg.verify_target == "smoothed_moment") {
    SmoothingSpec spec;
    spec.theta = cfg.theta;
    spec.source = parse_source(cfg.source);
    VarianceReport vr = smoothed_moment_report(*built.oracle, built.w0, spec, cfg.mc_draws,
                                               cfg.base_seed);
    outcome.measured = vr.smoothed_second_moment;
    outcome.std_error = vr.moment_std_error;
    outcome.bound = vr.combination_bound;
    double slack = vr.moment_std_error > 0.0 ? 3.0 * vr.moment_std_error : 1e-9;
    outcome.pass = outcome.measured <= outcome.bound + slack;
    report << vr.to_key_value();
    report << "result = " << (outcome.pass ? "PASS" : "FAIL") << "\n";
  } else {
    const auto* syn = dynamic_cast<const SyntheticOracle*>(built.oracle.get());
    if (!syn) {
      throw ConfigError("verification target '" + cfg.verify_target +
                        "' needs a synthetic oracle");
    }
    ProblemConstants constants;
    constants.L = *syn->analytic_smoothness();
    constants.mu = syn->problem().mu;
    constants.sigma2 = cfg.sigma2;
    constants.delta = cfg.delta;
    constants.f_at_w0 = syn->objective(built.w0);
    constants.f_star = syn->problem().f_star;
    const double eps2 = cfg.epsilon * cfg.epsilon;
    report << constants.to_key_value();
    report << "epsilon = " << format_real(cfg.epsilon) << "\n";
    report << "repeats = " << cfg.repeats << "\n";

    auto sgd_runner = [&](double eta, double theta, long long T) {
      return [&, eta, theta, T](std::uint64_t seed) {
        SgdConfig run_cfg;
        run_cfg.eta = eta;
        run_cfg.T = T;
        run_cfg.smoothing.theta = theta;
        run_cfg.smoothing.source = parse_source(cfg.source);
        run_cfg.seed = seed;
        run_cfg.w0 = built.w0;
        run_cfg.eval_stride = 1;
        return run_sgd_lsr(*built.oracle, run_cfg);
      };
    };

    if (cfg.verify_target == "lsr_bound" || cfg.verify_target == "bias_floor") {
      if (!(constants.delta > 0.0)) {
        throw DegenerateProblemError("this target needs delta > 0; use baseline_bound");
      }
      if (!(constants.sigma2 > 0.0)) {
        throw DegenerateProblemError("this target needs sigma2 > 0");
      }
      const double eta = 1.0 / constants.L;
      const double theta = 1.0 / (1.0 + constants.delta);
      const long long T = ceil_iterations(4.0 * constants.f_at_w0 / (eta * eps2));
      RepeatStats stats =
          repeat_stationarity(sgd_runner(eta, theta, T), StationarityRange::kAll, cfg.repeats,
                              cfg.base_seed);
      outcome.measured = stats.mean;
      outcome.std_error = stats.se;
      report << "eta = " << format_real(eta) << "\ntheta = " << format_real(theta)
             << "\nT = " << T << "\n";
      report << "measured_stationarity = " << format_real(stats.mean) << "\n";
      report << "std_error = " << format_real(stats.se) << "\n";
      if (cfg.verify_target == "lsr_bound") {
        outcome.bound = lsr_stationarity_bound(constants.f_at_w0, eta, T, constants.delta,
                                               constants.sigma2);
        double threshold = eps2 + 3.0 * stats.se;
        outcome.pass = outcome.measured <= outcome.bound && outcome.measured <= threshold;
        report << "bound = " << format_real(outcome.bound) << "\n";
        report << "eps2_plus_3se = " << format_real(threshold) << "\n";
      } else {
        RegimeResult regime = classify_regime(constants.delta, cfg.epsilon, constants.sigma2);
        if (regime.regime != Regime::kLsrFloor) {
          throw ConfigError("bias_floor needs delta > epsilon^2 / (4 sigma2)");
        }
        outcome.bound = regime.floor;
        outcome.pass = outcome.measured <= regime.floor && outcome.measured > eps2;
        report << "floor = " << format_real(regime.floor) << "\n";
        report << "eps2 = " << format_real(eps2) << "\n";
      }
      report << "result = " << (outcome.pass ? "PASS" : "FAIL") << "\n";
    } else if (cfg.verify_target == "baseline_bound") {
      const double eta = std::min(1.0 / constants.L,
                                  eps2 / (2.0 * constants.L * constants.sigma2));
      const long long T = ceil_iterations(4.0 * constants.f_at_w0 / (eta * eps2));
      RepeatStats stats = repeat_stationarity(sgd_runner(eta, 0.0, T), StationarityRange::kAll,
                                              cfg.repeats, cfg.base_seed);
      outcome.measured = stats.mean;
      outcome.std_error = stats.se;
      outcome.bound =
          baseline_stationarity_bound(constants.f_at_w0, eta, T, constants.L, constants.sigma2);
      double threshold = eps2 + 3.0 * stats.se;
      outcome.pass = outcome.measured <= outcome.bound && outcome.measured <= threshold;
      report << "eta = " << format_real(eta) << "\nT = " << T << "\n";
      report << "measured_stationarity = " << format_real(stats.mean) << "\n";
      report << "std_error = " << format_real(stats.se) << "\n";
      report << "bound = " << format_real(outcome.bound) << "\n";
      report << "eps2_plus_3se = " << format_real(threshold) << "\n";
      report << "result = " << (outcome.pass ? "PASS" : "FAIL") << "\n";
    } else {  // two_stage
      TslaSchedule schedule = tsla_schedule(constants, cfg.epsilon);
      auto runner = [&](std::uint64_t seed) {
        return run_tsla(*built.oracle, schedule, parse_source(cfg.source), built.w0, 1, seed);
      };
      RepeatStats stats = repeat_stationarity(runner, StationarityRange::kSecondStage,
                                              cfg.repeats, cfg.base_seed);
      outcome.measured = stats.mean;
      outcome.std_error = stats.se;
      outcome.bound = eps2;
      double threshold = eps2 + 3.0 * stats.se;
      outcome.pass = outcome.measured <= threshold;
      report << "theta = " << format_real(schedule.theta) << "\n";
      report << "eta1 = " << format_real(schedule.eta1) << "\nT1 = " << schedule.T1 << "\n";
      report << "eta2 = " << format_real(schedule.eta2) << "\nT2 = " << schedule.T2 << "\n";
      report << "measured_stage2_stationarity = " << format_real(stats.mean) << "\n";
      report << "std_error = " << format_real(stats.se) << "\n";
      report << "eps2_plus_3se = " << format_real(threshold) << "\n";
      report << "result = " << (outcome.pass ? "PASS" : "FAIL") << "\n";
    }
  }

  outcome.report = report.str();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  std::ofstream out(fs::path(cfg.out_dir) / "verify_report.txt");
  out << outcome.report;
  return outcome;
}

std::string run_estimation(const ExperimentConfig& cfg) {
  validate_config(cfg);
  BuiltOracle built = build_oracle(cfg);
  std::ostringstream out;

  ProblemConstants constants;
  if (const auto* syn = dynamic_cast<const SyntheticOracle*>(built.oracle.get())) {
    Box box;
    box.lo = Eigen::VectorXd::Constant(syn->dim(), -10.0);
    box.hi = Eigen::VectorXd::Constant(syn->dim(), 10.0);
    constants.L = estimate_L(*syn, box, cfg.estimate_samples, cfg.base_seed);
    constants.mu = syn->problem().mu;
    constants.sigma2 = cfg.sigma2;
    constants.delta = cfg.delta;
    constants.f_at_w0 = syn->objective(built.w0);
    constants.f_star = syn->problem().f_star;
    constants.f_star_provenance = FStarProvenance::kExact;
  } else {
    const auto* cls = dynamic_cast<const ClassificationOracle*>(built.oracle.get());
    Box box;
    box.lo = Eigen::VectorXd::Constant(cls->dim(), -cfg.region_radius);
    box.hi = Eigen::VectorXd::Constant(cls->dim(), cfg.region_radius);
    constants.L = estimate_L(*cls, box, cfg.estimate_samples, cfg.base_seed);
    constants.sigma2 = estimate_sigma2(*cls, built.w0);
    constants.delta = estimate_delta(*cls, built.w0, parse_source(cfg.source));
    RngStream probe_rng(cfg.base_seed, 99);
    std::vector<Eigen::VectorXd> probes;
    for (int p = 0; p < cfg.estimate_probes; ++p) {
      Eigen::VectorXd point(cls->dim());
      for (int j = 0; j < cls->dim(); ++j) {
        point[j] = -cfg.region_radius + 2.0 * cfg.region_radius * probe_rng.uniform();
      }
      probes.push_back(std::move(point));
    }
    probes.push_back(built.w0);
    double best_f = std::numeric_limits<double>::infinity();
    for (const auto& p : probes) best_f = std::min(best_f, cls->objective(p));
    constants.f_star = best_f;
    constants.f_star_provenance = FStarProvenance::kBestFound;
    constants.f_at_w0 = cls->objective(built.w0);
    constants.mu = estimate_mu(*cls, probes, best_f);
  }
  out << constants.to_key_value();

  SmoothingSpec spec;
  spec.theta = cfg.theta;
  spec.source = parse_source(cfg.source);
  VarianceReport vr =
      smoothed_moment_report(*built.oracle, built.w0, spec, cfg.mc_draws, cfg.base_seed);
  out << vr.to_key_value();

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  std::ofstream file(fs::path(cfg.out_dir) / "constants.txt");
  file << out.str();
  return out.str();
}

}  // namespace lsopt
