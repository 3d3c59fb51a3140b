#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cb/experiments.hpp"
#include "cb/lattice.hpp"
#include "cb/math.hpp"
#include "cb/oracles.hpp"

namespace {

using namespace cb;

std::vector<double> parse_grid_flag(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
  const std::string path = dir + "/" + name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::cout << "wrote " << path << "\n";
  return out;
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir = ".";
  std::string model_override;
  std::string features_override;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

ExperimentConfig load_config(const CommonFlags& flags) {
  ExperimentConfig cfg = ExperimentConfig::from_file(flags.config_path);
  if (flags.seed_set) cfg.grid.seed = flags.seed;
  if (!flags.model_override.empty()) {
    if (flags.model_override == "gbm")
      cfg.model.kind = ModelSpec::Kind::gbm;
    else if (flags.model_override == "cev")
      cfg.model.kind = ModelSpec::Kind::cev;
    else if (flags.model_override == "heston")
      cfg.model.kind = ModelSpec::Kind::heston;
    else
      throw std::invalid_argument("--model must be gbm, cev, or heston");
  }
  if (!flags.features_override.empty()) {
    if (flags.features_override == "plain")
      cfg.features = FeaturesEnabled{false, false};
    else if (flags.features_override == "call")
      cfg.features = FeaturesEnabled{false, true};
    else if (flags.features_override == "call+reset")
      cfg.features = FeaturesEnabled{true, true};
    else
      throw std::invalid_argument(
          "--features must be plain, call, or call+reset");
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* sub, CommonFlags& flags, bool config_required) {
  auto* opt = sub->add_option("--config", flags.config_path,
                              "experiment config file (INI)");
  if (config_required) opt->required();
  sub->add_option("--out", flags.out_dir, "output directory (default: .)");
  sub->add_option("--model", flags.model_override,
                  "override model kind: gbm, cev, heston");
  sub->add_option("--features", flags.features_override,
                  "override provisions: plain, call, call+reset");
  sub->add_option_function<std::uint64_t>(
      "--seed",
      [&flags](const std::uint64_t& v) {
        flags.seed = v;
        flags.seed_set = true;
      },
      "override training seed (test seed is always seed+1)");
}

int cmd_price(const CommonFlags& flags) {
  const ExperimentConfig cfg = load_config(flags);
  const PriceRun run = run_price(cfg);
  write_price_report_text(run.report, std::cout);
  std::ofstream out = open_output(flags.out_dir, cfg.tag + "_price.csv");
  write_price_report_csv(run.report, out);
  out << "# " << cfg.parameter_echo() << "\n";
  std::ofstream losses =
      open_output(flags.out_dir, cfg.tag + "_step_losses.csv");
  write_step_losses_csv(run.report, losses);
  return 0;
}

int cmd_decompose(const CommonFlags& flags) {
  const ExperimentConfig cfg = load_config(flags);
  const DecompositionResult result = run_decomposition(cfg);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%-8s plain %.3f  call_only %.3f  call_and_reset %.3f  "
                "call_effect %+.3f  reset_effect %+.3f\n",
                result.model.c_str(), result.plain.price,
                result.call_only.price, result.call_and_reset.price,
                result.call_effect, result.reset_effect);
  std::cout << buf;
  std::ofstream out =
      open_output(flags.out_dir, cfg.tag + "_decomposition.csv");
  write_decomposition_csv(result, cfg, out);
  return 0;
}

int cmd_sensitivity(const CommonFlags& flags) {
  const ExperimentConfig cfg = load_config(flags);
  const std::vector<SensitivityRow> rows = run_sensitivity(cfg);
  char buf[160];
  for (const SensitivityRow& row : rows) {
    std::snprintf(buf, sizeof buf, "%-8s %+4d%%  value %.4g  price %.3f  "
                  "(se %.3f)  delta %+.3f%%\n",
                  row.parameter.c_str(), row.perturbation_pct, row.value,
                  row.price, row.standard_error, row.delta_pct);
    std::cout << buf;
  }
  std::ofstream out = open_output(flags.out_dir, cfg.tag + "_sensitivity.csv");
  write_sensitivity_csv(rows, cfg, out);
  return 0;
}

int cmd_surface(const CommonFlags& flags, const std::string& param1,
                const std::string& grid1, const std::string& param2,
                const std::string& grid2) {
  ExperimentConfig cfg = load_config(flags);
  std::string p1 = param1, p2 = param2;
  std::vector<double> g1 = parse_grid_flag(grid1);
  std::vector<double> g2 = parse_grid_flag(grid2);
  if (p1.empty() || p2.empty()) {
    if (cfg.sweeps.size() < 2)
      throw std::invalid_argument(
          "surface: pass --param1/--param2 or configure two sweeps");
    p1 = cfg.sweeps[0].parameter;
    g1 = cfg.sweeps[0].values;
    p2 = cfg.sweeps[1].parameter;
    g2 = cfg.sweeps[1].values;
  }
  const std::vector<SurfaceCell> cells = run_surface(cfg, p1, g1, p2, g2);
  std::ofstream out = open_output(flags.out_dir, cfg.tag + "_surface.csv");
  write_surface_csv(cells, p1, p2, cfg, out);
  std::cout << cells.size() << " cells over " << p1 << " x " << p2 << "\n";
  return 0;
}

int cmd_statespace(const CommonFlags& flags, const std::string& snapshots) {
  const ExperimentConfig cfg = load_config(flags);
  const std::vector<double> times = parse_grid_flag(snapshots);
  const std::vector<StatespaceRow> rows = run_statespace(cfg, times);
  std::ofstream out = open_output(flags.out_dir, cfg.tag + "_statespace.csv");
  write_statespace_csv(rows, cfg, out);
  long conversions = 0;
  for (const StatespaceRow& row : rows) conversions += row.convert ? 1 : 0;
  std::cout << rows.size() << " rows, " << conversions << " conversions\n";
  return 0;
}

// Built-in cross-checks, small enough to finish in under a minute: simulation
// drift, lattice identities, the polynomial benchmark against the closed
// form, and the analytic gradient check.
int cmd_validate(const CommonFlags& flags) {
  int failures = 0;
  auto report = [&failures](const char* name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
    if (!detail.empty()) std::cout << " — " << detail;
    std::cout << "\n";
    if (!ok) ++failures;
  };
  char buf[256];

  ExperimentConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = load_config(flags);
  } else {
    cfg.grid.seed = 7001;
    cfg.validate();
  }

  // Discounted-mean drift of the configured model on a reduced grid.
  {
    GridSpec grid = cfg.grid;
    grid.n_paths = 4000;
    const PathSet paths =
        simulate(cfg.s0, cfg.model, grid, cfg.contract.risk_free_rate);
    const DriftCheck drift =
        discounted_drift_check(paths, cfg.contract.risk_free_rate);
    std::snprintf(buf, sizeof buf, "max |z| %.2f at step %d", drift.max_abs_z,
                  drift.worst_step);
    report("risk-neutral drift", drift.max_abs_z < 4.0, buf);
    if (paths.has_variance()) {
      bool nonneg = true;
      for (double v : paths.variance) nonneg = nonneg && v >= 0.0;
      report("variance non-negativity", nonneg, "");
    }
  }

  // One-step lattice identity: the exact solver must reproduce the two-term
  // discounted average bit for bit.
  {
    SmallLattice lat{cfg.s0, 0.3, 1, cfg.contract.maturity_years};
    ContractTerms t = cfg.contract;
    t.reset_ratio = 1e-9;
    t.call_ratio = 1e9;
    t.window_length = 1;
    t.reset_required_days = 1;
    t.call_required_days = 1;
    const double r = t.risk_free_rate;
    const PathSet ps = lattice_paths(lat, r);
    const double su = lattice_stock_price(lat, r, 1, 0);
    const double sd = lattice_stock_price(lat, r, 0, 1);
    const double expected =
        std::exp(-r * lat.step_years) *
            (0.5 * terminal_payoff(su, t.initial_conversion_price, t) +
             0.5 * terminal_payoff(sd, t.initial_conversion_price, t)) +
        lat.step_years * t.face_value * t.coupon_rate;
    const double solved = exact_regression_solve(ps, t, lat);
    std::snprintf(buf, sizeof buf, "solver %.12f expected %.12f", solved,
                  expected);
    report("one-step lattice identity", solved == expected, buf);
  }

  // Polynomial benchmark against the closed form (plain GBM).
  {
    ExperimentConfig small = cfg;
    small.model = ModelSpec::gbm(0.30);
    small.features = FeaturesEnabled{false, false};
    small.grid.n_paths = 4000;
    small.n_test_paths = 2000;
    small.grid.steps_per_year = 26;
    GridSpec test_grid = small.grid;
    test_grid.seed = small.grid.seed + 1;
    test_grid.n_paths = small.n_test_paths;
    PathSet train = simulate(small.s0, small.model, small.grid,
                             small.contract.risk_free_rate);
    PathSet test = simulate(small.s0, small.model, test_grid,
                            small.contract.risk_free_rate);
    forward_pass(train, small.contract, small.features);
    forward_pass(test, small.contract, small.features);
    const LsmcReport lsmc =
        lsmc_poly_price(train, test, small.contract, small.features, 3);
    const double closed = plain_gbm_closed_form(
        small.s0, small.contract, small.model.sigma, small.grid.n_steps());
    const double gap = std::fabs(lsmc.price - closed);
    std::snprintf(buf, sizeof buf, "lsmc %.4f closed %.4f (%.2f se)",
                  lsmc.price, closed, gap / lsmc.standard_error);
    report("polynomial benchmark vs closed form",
           gap < 3.0 * lsmc.standard_error, buf);
  }

  // Analytic gradients against central differences at a generic point.
  {
    NetworkConfig nc;
    nc.input_dim = 5;
    nc.hidden_layers = 2;
    nc.hidden_width = 8;
    nc.init_seed = 99;
    Network net = init_network(nc);
    for (auto& b : net.biases) b.array() += 0.05;  // step off the ReLU kinks
    Rng rng(2024, 17);
    Eigen::MatrixXd X(5, 16);
    for (int c = 0; c < X.cols(); ++c)
      for (int r = 0; r < X.rows(); ++r) X(r, c) = rng.next_normal();
    Eigen::VectorXd y(16);
    for (int i = 0; i < 16; ++i) y(i) = rng.next_normal();
    const double err = max_gradient_rel_error(net, X, y, 1e-6);
    std::snprintf(buf, sizeof buf, "max relative error %.3g", err);
    report("analytic gradient check", err < 1e-4, buf);
  }

  if (failures == 0) {
    std::cout << "all checks passed\n";
    return 0;
  }
  std::cout << failures << " check(s) failed\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convertible bond pricer: deep backward induction with "
               "conversion-price resets and issuer calls"};
  app.require_subcommand(1);

  CommonFlags price_flags, decomp_flags, sens_flags, surf_flags, state_flags,
      validate_flags;
  std::string param1, param2, grid1, grid2;
  std::string snapshots = "1,3,5";

  CLI::App* price = app.add_subcommand("price", "price one configuration");
  add_common(price, price_flags, true);

  CLI::App* decomp = app.add_subcommand(
      "decompose", "plain / call-only / call-and-reset decomposition");
  add_common(decomp, decomp_flags, true);

  CLI::App* sens = app.add_subcommand(
      "sensitivity", "sweep configured parameters around the baseline");
  add_common(sens, sens_flags, true);

  CLI::App* surf =
      app.add_subcommand("surface", "two-parameter price surface");
  add_common(surf, surf_flags, true);
  surf->add_option("--param1", param1, "first axis parameter");
  surf->add_option("--grid1", grid1, "comma-separated first axis values");
  surf->add_option("--param2", param2, "second axis parameter");
  surf->add_option("--grid2", grid2, "comma-separated second axis values");

  CLI::App* state = app.add_subcommand(
      "statespace", "trigger-counter cross-sections under the trained model");
  add_common(state, state_flags, true);
  state->add_option("--snapshots", snapshots,
                    "comma-separated snapshot times in years");

  CLI::App* validate = app.add_subcommand(
      "validate", "run built-in simulation/lattice/regression cross-checks");
  add_common(validate, validate_flags, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (price->parsed()) return cmd_price(price_flags);
    if (decomp->parsed()) return cmd_decompose(decomp_flags);
    if (sens->parsed()) return cmd_sensitivity(sens_flags);
    if (surf->parsed())
      return cmd_surface(surf_flags, param1, grid1, param2, grid2);
    if (state->parsed()) return cmd_statespace(state_flags, snapshots);
    if (validate->parsed()) return cmd_validate(validate_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
