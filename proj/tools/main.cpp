// Command-line front end: dataset simulation, experiment runs, budget tuning,
// and single-point open-set prediction.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "osc/dataset_io.hpp"
#include "osc/open_set.hpp"
#include "osc/simulation.hpp"

namespace {

// Configuration problems detected after flag parsing (still exit code 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimulateOptions {
  std::optional<double> theta;
  std::optional<std::size_t> n;
  std::size_t dim = 3;
  double sigma2 = 5e-6;
  std::string base = "uniform";
  std::uint64_t seed = 1;
  std::string out;
};

struct RunOptions {
  std::string methods = "cgtc-random";
  std::string variant = "XGT";
  double alpha = 0.1;
  std::optional<double> theta;
  std::size_t n = 500;
  std::string data;  // dataset CSV; overrides the DP generator
  double sigma2 = 5e-6;
  std::size_t reps = 20;
  std::size_t tests = 200;
  std::string alloc = "fixed";
  double alpha_class = 0.0, alpha_unseen = 0.0, alpha_seen = 0.0;
  double cal_fraction = 0.1;
  int knn_k = 5, lof_k = 20, folds = 10;
  double beta = 1.6, lambda = 0.5;
  std::uint64_t seed = 1;
  std::string out = "metrics.csv";
  std::string write_config;
  bool no_parallel = false;
};

struct TuneOptions {
  std::string data;
  double alpha = 0.1;
  double lambda = 0.5;
  int folds = 10;
  std::string variant = "XGT";
  std::string split = "random";
  double cal_fraction = 0.1;
  int knn_k = 5, lof_k = 20;
  double beta = 1.6;
  std::uint64_t seed = 1;
  std::string out;
};

struct PredictOptions {
  std::string data;
  std::vector<std::string> queries;
  std::string queries_file;
  double alpha = 0.1;
  std::string alloc = "tuned";
  std::string variant = "XGT";
  std::string split = "random";
  double cal_fraction = 0.1;
  int knn_k = 5, lof_k = 20, folds = 10;
  double beta = 1.6, lambda = 0.5;
  std::uint64_t seed = 1;
};

osc::PvalueVariant variant_from(const std::string& name) {
  const auto v = osc::parse_variant(name);
  if (!v) throw ConfigError("variant: unknown name '" + name + "' (GT, RGT, XGT)");
  return *v;
}

osc::ClassifierConfig classifier_from(int knn_k, int lof_k, double beta, double cal_fraction,
                                      const std::string& split) {
  osc::ClassifierConfig cfg;
  cfg.knn_k = knn_k;
  cfg.lof_k = lof_k;
  cfg.beta = beta;
  cfg.cal_fraction = cal_fraction;
  cfg.split = split == "selective" ? osc::SplitStrategy::selective
                                   : osc::SplitStrategy::random_uniform;
  return cfg;
}

std::vector<double> parse_feature_row(const std::string& text, std::size_t row) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
      throw std::runtime_error("query row " + std::to_string(row) + ": malformed feature '" +
                               field + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) {
    throw std::runtime_error("query row " + std::to_string(row) + ": empty feature row");
  }
  return values;
}

int cmd_simulate(const SimulateOptions& opt) {
  if (!opt.theta) throw ConfigError("--theta is required");
  if (!opt.n) throw ConfigError("--n is required");
  if (opt.out.empty()) throw ConfigError("--out is required");
  osc::DpConfig cfg;
  cfg.theta = *opt.theta;
  cfg.n = *opt.n;
  cfg.dim = opt.dim;
  cfg.sigma2 = opt.sigma2;
  cfg.base = opt.base == "normal" ? osc::DpConfig::Base::standard_normal
                                  : osc::DpConfig::Base::uniform01;
  osc::RandomSource master(opt.seed);
  auto dp_rng = master.fork("dp");
  const auto data = osc::dp_sample(cfg, dp_rng);
  osc::write_dataset_csv(opt.out, data);
  std::cout << "wrote " << data.size() << " rows (" << osc::observed_label_space(data.labels).size()
            << " distinct labels) to " << opt.out << "\n";
  return 0;
}

osc::ExperimentSpec spec_from(const RunOptions& opt, osc::MethodKind method,
                              const std::optional<osc::LabeledDataset>& csv_data) {
  osc::ExperimentSpec spec;
  if (csv_data) {
    spec.fixed_data = *csv_data;
  } else {
    if (!opt.theta) throw ConfigError("--theta is required unless --data is given");
    osc::DpConfig dp;
    dp.theta = *opt.theta;
    dp.sigma2 = opt.sigma2;
    spec.dp = dp;
  }
  spec.reference_size = opt.n;
  spec.method = method;
  spec.variant = variant_from(opt.variant);
  spec.alpha = opt.alpha;
  spec.reps = opt.reps;
  spec.tests_per_rep = opt.tests;
  spec.seed = opt.seed;
  spec.parallel = !opt.no_parallel;
  spec.classifier = classifier_from(opt.knn_k, opt.lof_k, opt.beta, opt.cal_fraction, "random");
  spec.tuning.lambda = opt.lambda;
  spec.tuning.folds = opt.folds;
  if (opt.alloc == "tuned") {
    spec.allocation = osc::AllocationMode::tuned;
  } else {
    spec.allocation = osc::AllocationMode::fixed;
    const double total = opt.alpha_class + opt.alpha_unseen + opt.alpha_seen;
    if (total != 0.0) {
      spec.fixed_allocation = {opt.alpha_class, opt.alpha_unseen, opt.alpha_seen};
    }
  }
  return spec;
}

int cmd_run(const RunOptions& opt) {
  std::vector<osc::MethodKind> methods;
  std::stringstream ss(opt.methods);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto m = osc::parse_method(token);
    if (!m) {
      throw ConfigError("method: unknown name '" + token +
                        "' (standard-random, standard-selective, cgtc-random, cgtc-selective)");
    }
    methods.push_back(*m);
  }
  if (methods.empty()) throw ConfigError("method: at least one method required");

  std::optional<osc::LabeledDataset> csv_data;
  if (!opt.data.empty()) csv_data = osc::read_dataset_csv(opt.data);

  std::vector<osc::MetricsRow> rows;
  std::printf("%-20s %-10s %-10s %-10s %-10s\n", "method", "coverage", "avg_size", "joker",
              "seen_misc");
  for (const auto method : methods) {
    const auto spec = spec_from(opt, method, csv_data);
    const auto metrics = osc::run_experiment(spec);
    const auto method_rows = osc::metrics_rows(spec, metrics);
    rows.insert(rows.end(), method_rows.begin(), method_rows.end());
    std::printf("%-20s %-10.4f %-10.3f %-10.4f %-10.4f\n", osc::method_name(method),
                metrics.coverage.value, metrics.avg_cardinality.value, metrics.joker_rate.value,
                metrics.seen_miscoverage.value);
    if (spec.allocation == osc::AllocationMode::tuned) {
      for (std::size_t rep = 0; rep < metrics.allocations.size(); ++rep) {
        const auto& a = metrics.allocations[rep];
        std::printf("  rep %2zu allocation: class=%.4f unseen=%.4f seen=%.4f\n", rep,
                    a.alpha_class, a.alpha_unseen, a.alpha_seen);
      }
    }
  }
  osc::write_metrics_csv(opt.out, rows);
  std::cout << "wrote " << rows.size() << " metric rows to " << opt.out << "\n";
  return 0;
}

int cmd_tune(const TuneOptions& opt) {
  if (opt.data.empty()) throw ConfigError("--data is required");
  const auto data = osc::read_dataset_csv(opt.data);
  osc::TuningConfig cfg;
  cfg.lambda = opt.lambda;
  cfg.folds = opt.folds;
  cfg.variant = variant_from(opt.variant);
  cfg.classifier = classifier_from(opt.knn_k, opt.lof_k, opt.beta, opt.cal_fraction, opt.split);
  osc::RandomSource master(opt.seed);
  auto tune_rng = master.fork("tune");
  const auto allocation = osc::tune_allocation(data, opt.alpha, cfg, tune_rng);
  std::printf("alpha_class=%.6f alpha_unseen=%.6f alpha_seen=%.6f\n", allocation.alpha_class,
              allocation.alpha_unseen, allocation.alpha_seen);
  if (!opt.out.empty()) {
    std::ofstream out(opt.out);
    if (!out) throw std::runtime_error("cannot write " + opt.out);
    out << "alpha_class=" << osc::format_double(allocation.alpha_class) << "\n"
        << "alpha_unseen=" << osc::format_double(allocation.alpha_unseen) << "\n"
        << "alpha_seen=" << osc::format_double(allocation.alpha_seen) << "\n";
  }
  return 0;
}

int cmd_predict(const PredictOptions& opt) {
  if (opt.data.empty()) throw ConfigError("--data is required");
  const auto data = osc::read_dataset_csv(opt.data);
  const auto variant = variant_from(opt.variant);
  const auto cfg =
      classifier_from(opt.knn_k, opt.lof_k, opt.beta, opt.cal_fraction, opt.split);

  osc::AlphaAllocation allocation;
  osc::RandomSource master(opt.seed);
  if (opt.alloc == "tuned") {
    osc::TuningConfig tcfg;
    tcfg.lambda = opt.lambda;
    tcfg.folds = opt.folds;
    tcfg.variant = variant;
    tcfg.classifier = cfg;
    auto tune_rng = master.fork("tune");
    allocation = osc::tune_allocation(data, opt.alpha, tcfg, tune_rng);
  } else {
    std::stringstream ss(opt.alloc);
    std::string field;
    std::vector<double> parts;
    while (std::getline(ss, field, ',')) parts.push_back(std::strtod(field.c_str(), nullptr));
    if (parts.size() != 3) {
      throw ConfigError("alloc: expected 'tuned' or three comma-separated values");
    }
    allocation = {parts[0], parts[1], parts[2]};
    allocation.validate(opt.alpha);
  }

  std::vector<std::vector<double>> queries;
  std::size_t row = 0;
  for (const auto& q : opt.queries) queries.push_back(parse_feature_row(q, ++row));
  if (!opt.queries_file.empty()) {
    std::ifstream in(opt.queries_file);
    if (!in) throw std::runtime_error("cannot open queries file: " + opt.queries_file);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      ++row;
      if (line.empty()) continue;
      queries.push_back(parse_feature_row(line, row));
    }
  }
  if (queries.empty()) throw ConfigError("query: no query features given");

  auto build_rng = master.fork("clf");
  const auto clf = osc::OpenSetClassifier::build(data, cfg, variant, build_rng);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (queries[q].size() != data.dim()) {
      throw std::runtime_error("query row " + std::to_string(q + 1) + ": expected " +
                               std::to_string(data.dim()) + " features, got " +
                               std::to_string(queries[q].size()));
    }
    auto point_rng = master.fork("predict").fork(q);
    auto unseen_rng = point_rng.fork("unseen");
    auto seen_rng = point_rng.fork("seen");
    auto closed_rng = point_rng.fork("closed");
    const double psi_unseen = clf.unseen_pvalue(queries[q], unseen_rng);
    const double psi_seen = clf.seen_pvalue(seen_rng);
    auto set = osc::apply_joker_rule(clf.closed_set(queries[q], allocation.alpha_class, closed_rng),
                                     psi_unseen, psi_seen, allocation);
    std::string tokens;
    for (osc::Label y : set.seen) {
      if (!tokens.empty()) tokens += ",";
      tokens += data.name_of(y);
    }
    if (set.joker) {
      if (!tokens.empty()) tokens += ",";
      tokens += "*";
    }
    if (tokens.empty()) tokens = "{}";
    std::printf("%s psi_unseen=%.6f psi_seen=%.6f\n", tokens.c_str(), psi_unseen, psi_seen);
  }
  return 0;
}

// Flat key=value config files; '#' starts a comment; values may be quoted.
std::vector<std::pair<std::string, std::string>> read_kv_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string t) {
      const auto a = t.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = t.find_last_not_of(" \t\r");
      return t.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    pairs.emplace_back(std::move(key), std::move(value));
  }
  return pairs;
}

// Applies config values to every option the command line left unset.
void apply_config(CLI::App* sub, const std::string& path) {
  const auto pairs = read_kv_config(path);
  std::vector<CLI::Option*> untouched;
  for (const auto& [key, value] : pairs) {
    if (key == "config" || key == "write-config") {
      throw ConfigError("config key '" + key + "' is not allowed in config files");
    }
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) throw ConfigError("unknown config key '" + key + "'");
    if (opt->count() > 0) continue;  // flags win
    if (std::find(untouched.begin(), untouched.end(), opt) == untouched.end()) {
      untouched.push_back(opt);
    }
    if (opt->get_expected_min() == 0) {
      opt->add_result(value.empty() ? std::string("true") : value);
    } else {
      opt->add_result(value);
    }
  }
  for (CLI::Option* opt : untouched) opt->run_callback();
}

void write_effective_config(CLI::App* sub, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  for (const CLI::Option* opt : sub->get_options()) {
    const auto& name = opt->get_lnames();
    if (name.empty()) continue;
    if (name[0] == "config" || name[0] == "write-config" || name[0] == "help") continue;
    if (opt->count() == 0) continue;
    for (const auto& result : opt->results()) out << name[0] << "=" << result << "\n";
  }
  if (!out) throw std::runtime_error("i/o failure while writing " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-set conformal classification toolkit"};
  app.require_subcommand(1);

  std::map<const CLI::App*, std::string> config_paths;

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a Dirichlet-process dataset CSV");
  simulate->add_option("--config", config_paths[simulate], "flat key=value config file");
  simulate->add_option("--theta", sim.theta, "DP concentration parameter");
  simulate->add_option("--n", sim.n, "number of samples");
  simulate->add_option("--dim", sim.dim, "feature dimension");
  simulate->add_option("--sigma2", sim.sigma2, "feature noise variance");
  simulate->add_option("--base", sim.base, "base distribution")
      ->check(CLI::IsMember({"uniform", "normal"}));
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("--out", sim.out, "output dataset CSV path");

  RunOptions run;
  auto* runc = app.add_subcommand("run", "Run a coverage/efficiency experiment");
  runc->add_option("--config", config_paths[runc], "flat key=value config file");
  runc->add_option("--method", run.methods,
                   "comma-separated methods: standard-random, standard-selective, "
                   "cgtc-random, cgtc-selective");
  runc->add_option("--variant", run.variant, "new-label p-value variant")
      ->check(CLI::IsMember({"GT", "RGT", "XGT"}));
  runc->add_option("--alpha", run.alpha, "total significance budget");
  runc->add_option("--theta", run.theta, "DP concentration (simulated data)");
  runc->add_option("--n", run.n, "reference sample size");
  runc->add_option("--data", run.data, "dataset CSV (replaces the DP generator)");
  runc->add_option("--sigma2", run.sigma2, "feature noise variance (simulated data)");
  runc->add_option("--reps", run.reps, "independent repetitions");
  runc->add_option("--tests", run.tests, "test points per repetition");
  runc->add_option("--alloc", run.alloc, "budget allocation mode")
      ->check(CLI::IsMember({"fixed", "tuned"}));
  runc->add_option("--alpha-class", run.alpha_class, "fixed allocation: closed-set budget");
  runc->add_option("--alpha-unseen", run.alpha_unseen, "fixed allocation: new-label budget");
  runc->add_option("--alpha-seen", run.alpha_seen, "fixed allocation: seen-label budget");
  runc->add_option("--cal-fraction", run.cal_fraction, "calibration share of the reference");
  runc->add_option("--knn-k", run.knn_k, "kNN neighbor count");
  runc->add_option("--lof-k", run.lof_k, "LOF neighborhood size");
  runc->add_option("--beta", run.beta, "power-law exponent for seen-label weights");
  runc->add_option("--lambda", run.lambda, "tuning loss balance");
  runc->add_option("--folds", run.folds, "tuning cross-validation folds");
  runc->add_option("--seed", run.seed, "random seed");
  runc->add_option("--out", run.out, "metrics CSV path");
  runc->add_option("--write-config", run.write_config, "write the effective config to PATH");
  runc->add_flag("--no-parallel", run.no_parallel, "run repetitions sequentially");

  TuneOptions tune;
  auto* tunec = app.add_subcommand("tune", "Tune the significance-budget allocation");
  tunec->add_option("--config", config_paths[tunec], "flat key=value config file");
  tunec->add_option("--data", tune.data, "dataset CSV");
  tunec->add_option("--alpha", tune.alpha, "total significance budget");
  tunec->add_option("--lambda", tune.lambda, "loss balance");
  tunec->add_option("--folds", tune.folds, "cross-validation folds");
  tunec->add_option("--variant", tune.variant, "new-label p-value variant")
      ->check(CLI::IsMember({"GT", "RGT", "XGT"}));
  tunec->add_option("--split", tune.split, "inner split strategy")
      ->check(CLI::IsMember({"random", "selective"}));
  tunec->add_option("--cal-fraction", tune.cal_fraction, "calibration share");
  tunec->add_option("--knn-k", tune.knn_k, "kNN neighbor count");
  tunec->add_option("--lof-k", tune.lof_k, "LOF neighborhood size");
  tunec->add_option("--beta", tune.beta, "power-law exponent");
  tunec->add_option("--seed", tune.seed, "random seed");
  tunec->add_option("--out", tune.out, "write the allocation to PATH");

  PredictOptions pred;
  auto* predc = app.add_subcommand("predict", "Open-set prediction sets for query points");
  predc->add_option("--config", config_paths[predc], "flat key=value config file");
  predc->add_option("--data", pred.data, "reference dataset CSV");
  predc->add_option("--query", pred.queries, "comma-separated feature vector (repeatable)");
  predc->add_option("--queries", pred.queries_file, "file with one feature row per line");
  predc->add_option("--alpha", pred.alpha, "total significance budget");
  predc->add_option("--alloc", pred.alloc, "'tuned' or 'class,unseen,seen'");
  predc->add_option("--variant", pred.variant, "new-label p-value variant")
      ->check(CLI::IsMember({"GT", "RGT", "XGT"}));
  predc->add_option("--split", pred.split, "split strategy")
      ->check(CLI::IsMember({"random", "selective"}));
  predc->add_option("--cal-fraction", pred.cal_fraction, "calibration share");
  predc->add_option("--knn-k", pred.knn_k, "kNN neighbor count");
  predc->add_option("--lof-k", pred.lof_k, "LOF neighborhood size");
  predc->add_option("--beta", pred.beta, "power-law exponent");
  predc->add_option("--lambda", pred.lambda, "tuning loss balance");
  predc->add_option("--folds", pred.folds, "tuning folds");
  predc->add_option("--seed", pred.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    for (CLI::App* sub : {simulate, runc, tunec, predc}) {
      if (sub->parsed() && !config_paths[sub].empty()) apply_config(sub, config_paths[sub]);
    }
    if (*simulate) return cmd_simulate(sim);
    if (*runc) {
      if (!run.write_config.empty()) write_effective_config(runc, run.write_config);
      return cmd_run(run);
    }
    if (*tunec) return cmd_tune(tune);
    if (*predc) return cmd_predict(pred);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
