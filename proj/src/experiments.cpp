#include "cb/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cb {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw std::invalid_argument("config: bad number for " + key + ": " + value);
  return v;
}

long parse_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long v = std::strtol(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    throw std::invalid_argument("config: bad integer for " + key + ": " + value);
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": " + value);
}

std::vector<double> parse_list(const std::string& key,
                               const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw std::invalid_argument("config: empty entry in list " + key);
    out.push_back(parse_double(key, item));
  }
  if (out.empty())
    throw std::invalid_argument("config: empty sweep list for " + key);
  return out;
}

FeaturesEnabled parse_features(const std::string& value) {
  if (value == "plain") return FeaturesEnabled{false, false};
  if (value == "call") return FeaturesEnabled{false, true};
  if (value == "reset") return FeaturesEnabled{true, false};
  if (value == "call+reset" || value == "call_and_reset")
    return FeaturesEnabled{true, true};
  throw std::invalid_argument(
      "config: features must be plain, call, reset, or call+reset");
}

void apply_contract_key(ContractTerms& t, const std::string& key,
                        const std::string& value) {
  if (key == "face_value")
    t.face_value = parse_double(key, value);
  else if (key == "coupon_rate")
    t.coupon_rate = parse_double(key, value);
  else if (key == "initial_conversion_price")
    t.initial_conversion_price = parse_double(key, value);
  else if (key == "reset_ratio")
    t.reset_ratio = parse_double(key, value);
  else if (key == "call_ratio")
    t.call_ratio = parse_double(key, value);
  else if (key == "reset_required_days")
    t.reset_required_days = static_cast<int>(parse_int(key, value));
  else if (key == "call_required_days")
    t.call_required_days = static_cast<int>(parse_int(key, value));
  else if (key == "window_length")
    t.window_length = static_cast<int>(parse_int(key, value));
  else if (key == "maturity_years")
    t.maturity_years = parse_double(key, value);
  else if (key == "call_redemption_price")
    t.call_redemption_price = parse_double(key, value);
  else if (key == "risk_free_rate")
    t.risk_free_rate = parse_double(key, value);
  else if (key == "no_trigger_before")
    t.no_trigger_before = static_cast<int>(parse_int(key, value));
  else if (key == "reset_floor")
    t.reset_floor = parse_double(key, value);
  else
    throw std::invalid_argument("config: unknown [contract] key " + key);
}

void apply_model_key(ExperimentConfig& cfg, const std::string& key,
                     const std::string& value) {
  ModelSpec& m = cfg.model;
  if (key == "kind") {
    if (value == "gbm")
      m.kind = ModelSpec::Kind::gbm;
    else if (value == "cev")
      m.kind = ModelSpec::Kind::cev;
    else if (value == "heston")
      m.kind = ModelSpec::Kind::heston;
    else
      throw std::invalid_argument("config: kind must be gbm, cev, or heston");
  } else if (key == "s0")
    cfg.s0 = parse_double(key, value);
  else if (key == "sigma")
    m.sigma = parse_double(key, value);
  else if (key == "gamma")
    m.gamma = parse_double(key, value);
  else if (key == "v0")
    m.v0 = parse_double(key, value);
  else if (key == "kappa")
    m.kappa = parse_double(key, value);
  else if (key == "theta")
    m.theta = parse_double(key, value);
  else if (key == "eta")
    m.eta = parse_double(key, value);
  else if (key == "rho")
    m.rho = parse_double(key, value);
  else
    throw std::invalid_argument("config: unknown [model] key " + key);
}

void apply_grid_key(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
  if (key == "steps_per_year")
    cfg.grid.steps_per_year = static_cast<int>(parse_int(key, value));
  else if (key == "n_train_paths")
    cfg.grid.n_paths = static_cast<int>(parse_int(key, value));
  else if (key == "n_test_paths")
    cfg.n_test_paths = static_cast<int>(parse_int(key, value));
  else if (key == "seed")
    cfg.grid.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "antithetic")
    cfg.grid.antithetic = parse_bool(key, value);
  else
    throw std::invalid_argument("config: unknown [grid] key " + key);
}

void apply_network_key(NetworkConfig& n, const std::string& key,
                       const std::string& value) {
  if (key == "hidden_layers")
    n.hidden_layers = static_cast<int>(parse_int(key, value));
  else if (key == "hidden_width")
    n.hidden_width = static_cast<int>(parse_int(key, value));
  else if (key == "learning_rate")
    n.learning_rate = parse_double(key, value);
  else if (key == "batch_size")
    n.batch_size = static_cast<int>(parse_int(key, value));
  else if (key == "epochs")
    n.epochs = static_cast<int>(parse_int(key, value));
  else if (key == "init_seed")
    n.init_seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "cold_start_epochs")
    n.cold_start_epochs = static_cast<int>(parse_int(key, value));
  else if (key == "standardize_targets")
    n.standardize_targets = parse_bool(key, value);
  else
    throw std::invalid_argument("config: unknown [network] key " + key);
}

void apply_experiment_key(ExperimentConfig& cfg, const std::string& key,
                          const std::string& value) {
  if (key == "tag") {
    cfg.tag = value;
  } else if (key == "features") {
    cfg.features = parse_features(value);
  } else if (key.rfind("sweep_", 0) == 0) {
    ExperimentConfig::Sweep sweep;
    sweep.parameter = key.substr(6);
    sweep.values = parse_list(key, value);
    cfg.sweeps.push_back(std::move(sweep));
  } else {
    throw std::invalid_argument("config: unknown [experiment] key " + key);
  }
}

const char* kSweepParameters[] = {"s0", "sigma", "v0", "a", "b", "maturity"};

bool known_parameter(const std::string& name) {
  for (const char* p : kSweepParameters)
    if (name == p) return true;
  return false;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: malformed section at line " +
                                    std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key=value at line " +
                                  std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config: empty key or value at line " +
                                  std::to_string(line_no));

    if (section == "contract")
      apply_contract_key(cfg.contract, key, value);
    else if (section == "model")
      apply_model_key(cfg, key, value);
    else if (section == "grid")
      apply_grid_key(cfg, key, value);
    else if (section == "network")
      apply_network_key(cfg.network, key, value);
    else if (section == "experiment")
      apply_experiment_key(cfg, key, value);
    else
      throw std::invalid_argument("config: unknown section [" + section + "]");
  }
  cfg.grid.maturity_years = cfg.contract.maturity_years;
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str());
}

void ExperimentConfig::validate() const {
  contract.validate();
  model.validate();
  grid.validate();
  network.validate();
  if (!(s0 > 0.0)) throw std::invalid_argument("config: s0 must be > 0");
  if (grid.maturity_years != contract.maturity_years)
    throw std::invalid_argument(
        "config: grid and contract maturities disagree");
  if (n_test_paths < 2)
    throw std::invalid_argument("config: n_test_paths must be >= 2");
  if (tag.empty()) throw std::invalid_argument("config: tag must be nonempty");
  for (const Sweep& sweep : sweeps) {
    if (!known_parameter(sweep.parameter))
      throw std::invalid_argument("config: unknown sweep parameter " +
                                  sweep.parameter);
    if (sweep.values.empty())
      throw std::invalid_argument("config: empty sweep for " + sweep.parameter);
  }
}

std::string ExperimentConfig::parameter_echo() const {
  char buf[512];
  std::string echo;
  echo += "model=";
  echo += model.tag();
  std::snprintf(buf, sizeof buf, ";s0=%.10g", s0);
  echo += buf;
  if (model.kind == ModelSpec::Kind::gbm) {
    std::snprintf(buf, sizeof buf, ";sigma=%.10g", model.sigma);
    echo += buf;
  } else if (model.kind == ModelSpec::Kind::cev) {
    std::snprintf(buf, sizeof buf, ";sigma=%.10g;gamma=%.10g", model.sigma,
                  model.gamma);
    echo += buf;
  } else {
    std::snprintf(buf, sizeof buf,
                  ";v0=%.10g;kappa=%.10g;theta=%.10g;eta=%.10g;rho=%.10g",
                  model.v0, model.kappa, model.theta, model.eta, model.rho);
    echo += buf;
  }
  std::snprintf(
      buf, sizeof buf,
      ";a=%.10g;b=%.10g;window=%d;reset_days=%d;call_days=%d;T=%.10g;K=%.10g"
      ";r=%.10g;coupon=%.10g;face=%.10g;H0=%.10g",
      contract.reset_ratio, contract.call_ratio, contract.window_length,
      contract.reset_required_days, contract.call_required_days,
      contract.maturity_years, contract.call_redemption_price,
      contract.risk_free_rate, contract.coupon_rate, contract.face_value,
      contract.initial_conversion_price);
  echo += buf;
  std::snprintf(buf, sizeof buf,
                ";spy=%d;train=%d;test=%d;seed=%llu;antithetic=%d;features=%s",
                grid.steps_per_year, grid.n_paths, n_test_paths,
                static_cast<unsigned long long>(grid.seed),
                grid.antithetic ? 1 : 0, features.tag());
  echo += buf;
  return echo;
}

ExperimentConfig with_parameter(const ExperimentConfig& cfg,
                                const std::string& name, double value) {
  ExperimentConfig out = cfg;
  if (name == "s0")
    out.s0 = value;
  else if (name == "sigma")
    out.model.sigma = value;
  else if (name == "v0")
    out.model.v0 = value;
  else if (name == "a")
    out.contract.reset_ratio = value;
  else if (name == "b")
    out.contract.call_ratio = value;
  else if (name == "maturity") {
    out.contract.maturity_years = value;
    out.grid.maturity_years = value;
  } else
    throw std::invalid_argument("unknown sweep parameter " + name);
  out.validate();
  return out;
}

PriceRun run_price(const ExperimentConfig& cfg) {
  cfg.validate();
  PriceRun run;
  GridSpec test_grid = cfg.grid;
  test_grid.seed = cfg.grid.seed + 1;
  test_grid.n_paths = cfg.n_test_paths;
  run.train = simulate(cfg.s0, cfg.model, cfg.grid, cfg.contract.risk_free_rate);
  run.test =
      simulate(cfg.s0, cfg.model, test_grid, cfg.contract.risk_free_rate);
  forward_pass(run.train, cfg.contract, cfg.features);
  forward_pass(run.test, cfg.contract, cfg.features);
  run.solution = backward_solve(run.train, run.test, cfg.contract, cfg.model,
                                cfg.features, cfg.network);
  run.report = run.solution.report;
  return run;
}

DecompositionResult run_decomposition(const ExperimentConfig& cfg) {
  cfg.validate();
  GridSpec test_grid = cfg.grid;
  test_grid.seed = cfg.grid.seed + 1;
  test_grid.n_paths = cfg.n_test_paths;
  PathSet train =
      simulate(cfg.s0, cfg.model, cfg.grid, cfg.contract.risk_free_rate);
  PathSet test =
      simulate(cfg.s0, cfg.model, test_grid, cfg.contract.risk_free_rate);

  auto solve_with = [&](FeaturesEnabled enabled) {
    forward_pass(train, cfg.contract, enabled);
    forward_pass(test, cfg.contract, enabled);
    return backward_solve(train, test, cfg.contract, cfg.model, enabled,
                          cfg.network)
        .report;
  };

  DecompositionResult result;
  result.model = cfg.model.tag();
  result.plain = solve_with(FeaturesEnabled{false, false});
  result.call_only = solve_with(FeaturesEnabled{false, true});
  result.call_and_reset = solve_with(FeaturesEnabled{true, true});
  result.call_effect = result.call_only.price - result.plain.price;
  result.reset_effect = result.call_and_reset.price - result.call_only.price;
  return result;
}

std::vector<SensitivityRow> run_sensitivity(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.sweeps.empty())
    throw std::invalid_argument("run_sensitivity: no sweeps configured");
  static const int kLabels[5] = {-20, -10, 0, 10, 20};

  std::vector<SensitivityRow> rows;
  for (const ExperimentConfig::Sweep& sweep : cfg.sweeps) {
    if (sweep.values.size() != 5)
      throw std::invalid_argument(
          "run_sensitivity: sweep " + sweep.parameter +
          " must hold exactly 5 values (-20% .. +20% rows)");

    double baseline_price = 0.0;
    std::vector<SensitivityRow> block;
    for (std::size_t i = 0; i < sweep.values.size(); ++i) {
      const ExperimentConfig cell =
          with_parameter(cfg, sweep.parameter, sweep.values[i]);
      const PriceRun run = run_price(cell);
      SensitivityRow row;
      row.parameter = sweep.parameter;
      row.perturbation_pct = kLabels[i];
      row.value = sweep.values[i];
      row.price = run.report.price;
      row.standard_error = run.report.standard_error;
      if (kLabels[i] == 0) baseline_price = row.price;
      block.push_back(row);
    }
    for (SensitivityRow& row : block)
      row.delta_pct = (row.price - baseline_price) / baseline_price * 100.0;
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

std::vector<SurfaceCell> run_surface(const ExperimentConfig& cfg,
                                     const std::string& param1,
                                     const std::vector<double>& grid1,
                                     const std::string& param2,
                                     const std::vector<double>& grid2) {
  cfg.validate();
  if (grid1.empty() || grid2.empty())
    throw std::invalid_argument("run_surface: empty axis grid");
  if (grid1.size() * grid2.size() > 2500)
    throw std::invalid_argument("run_surface: grid exceeds 2500 cells");

  std::vector<SurfaceCell> cells;
  cells.reserve(grid1.size() * grid2.size());
  for (double v1 : grid1) {
    const ExperimentConfig outer = with_parameter(cfg, param1, v1);
    for (double v2 : grid2) {
      const ExperimentConfig cell = with_parameter(outer, param2, v2);
      const PriceRun run = run_price(cell);
      cells.push_back(
          SurfaceCell{v1, v2, run.report.price, run.report.standard_error});
    }
  }
  return cells;
}

std::vector<StatespaceRow> run_statespace(
    const ExperimentConfig& cfg, const std::vector<double>& snapshot_times) {
  cfg.validate();
  if (snapshot_times.empty())
    throw std::invalid_argument("run_statespace: no snapshot times");
  for (double t : snapshot_times)
    if (t < 0.0 || t >= cfg.contract.maturity_years)
      throw std::invalid_argument(
          "run_statespace: snapshot times must lie in [0, T)");

  const PriceRun run = run_price(cfg);
  const PathSet& test = run.test;
  const int N = test.n_steps;
  const double h = test.step_years;
  const double disc = std::exp(-cfg.contract.risk_free_rate * h);
  const double coupon = h * cfg.contract.face_value * cfg.contract.coupon_rate;

  std::vector<StatespaceRow> rows;
  rows.reserve(snapshot_times.size() * static_cast<std::size_t>(test.n_paths));
  Eigen::VectorXd feats(feature_dim(cfg.model));
  for (double t : snapshot_times) {
    int step = static_cast<int>(std::lround(t / h));
    step = std::min(std::max(step, 0), N - 1);
    for (int j = 0; j < test.n_paths; ++j) {
      const std::size_t k = test.idx(j, step);
      StatespaceRow row;
      row.snapshot_years = t;
      row.path = j;
      row.call_counter = test.call_count[k];
      row.cumulative_resets = test.cumulative_resets[k];
      row.stock = test.stock[k];
      row.convert = false;
      if (test.call_indicator[k]) {
        double next_value;
        if (step + 1 == N) {
          next_value = terminal_payoff(test.S(j, N), test.H(j, N), cfg.contract);
        } else {
          features_at(test, j, step + 1, feats);
          next_value = forward(run.solution.networks[static_cast<std::size_t>(
                                   step + 1)],
                               feats);
        }
        const double cont = disc * next_value + coupon;
        const double conv = cfg.contract.face_value / test.conversion_price[k] *
                            test.stock[k];
        row.convert =
            conv >= std::min(cont, cfg.contract.call_redemption_price);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_decomposition_csv(const DecompositionResult& result,
                             const ExperimentConfig& cfg, std::ostream& out) {
  out << "model,plain,call_only,call_and_reset,call_effect,reset_effect,"
         "se_plain,se_call_only,se_call_and_reset,params\n";
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%s,%.10f,%.10f,%.10f,%.10f,%.10f,%.10f,%.10f,%.10f,",
                result.model.c_str(), result.plain.price,
                result.call_only.price, result.call_and_reset.price,
                result.call_effect, result.reset_effect,
                result.plain.standard_error, result.call_only.standard_error,
                result.call_and_reset.standard_error);
  out << buf << cfg.parameter_echo() << "\n";
}

void write_sensitivity_csv(const std::vector<SensitivityRow>& rows,
                           const ExperimentConfig& cfg, std::ostream& out) {
  out << "parameter,perturbation_pct,value,price,stderr,delta_pct,params\n";
  char buf[256];
  for (const SensitivityRow& row : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.10g,%.10f,%.10f,%.10f,",
                  row.parameter.c_str(), row.perturbation_pct, row.value,
                  row.price, row.standard_error, row.delta_pct);
    out << buf << cfg.parameter_echo() << "\n";
  }
}

void write_surface_csv(const std::vector<SurfaceCell>& cells,
                       const std::string& param1, const std::string& param2,
                       const ExperimentConfig& cfg, std::ostream& out) {
  out << param1 << "," << param2 << ",price,stderr,params\n";
  char buf[192];
  for (const SurfaceCell& cell : cells) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10f,%.10f,", cell.p1,
                  cell.p2, cell.price, cell.standard_error);
    out << buf << cfg.parameter_echo() << "\n";
  }
}

void write_statespace_csv(const std::vector<StatespaceRow>& rows,
                          const ExperimentConfig& cfg, std::ostream& out) {
  out << "snapshot_years,path,call_counter,cumulative_resets,stock,decision,"
         "params\n";
  char buf[160];
  for (const StatespaceRow& row : rows) {
    std::snprintf(buf, sizeof buf, "%.10g,%d,%d,%d,%.10f,%s,",
                  row.snapshot_years, row.path, row.call_counter,
                  row.cumulative_resets, row.stock,
                  row.convert ? "convert" : "continue");
    out << buf << cfg.parameter_echo() << "\n";
  }
}

}  // namespace cb
