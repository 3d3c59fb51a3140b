#include "cb/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "cb/math.hpp"

namespace cb {

namespace {

// CEV paths are kept strictly positive by an absorbing floor; at the
// parameter ranges used here the floor is essentially never touched but it
// guards the S^gamma evaluation.
constexpr double kStockFloor = 1e-8;

void check_common(double s0, const GridSpec& grid) {
  if (!(s0 > 0.0)) throw std::invalid_argument("simulate: s0 must be > 0");
  grid.validate();
}

PathSet make_path_set(double s0, const GridSpec& grid, bool with_variance,
                      double v0) {
  PathSet ps;
  ps.n_paths = grid.n_paths;
  ps.n_steps = grid.n_steps();
  ps.s0 = s0;
  ps.v0 = v0;
  ps.step_years = grid.step_size();
  std::size_t n = static_cast<std::size_t>(ps.n_paths) *
                  static_cast<std::size_t>(ps.n_steps + 1);
  ps.stock.assign(n, 0.0);
  if (with_variance) ps.variance.assign(n, 0.0);
  return ps;
}

// Per-path normal source honouring the antithetic flag: odd paths replay the
// stream of the preceding even path with flipped signs.
class NormalSource {
 public:
  NormalSource(const GridSpec& grid, int path)
      : rng_(grid.seed, grid.antithetic ? static_cast<std::uint64_t>(path / 2)
                                        : static_cast<std::uint64_t>(path)),
        flip_(grid.antithetic && (path % 2 == 1)) {}

  double next() {
    double z = rng_.next_normal();
    return flip_ ? -z : z;
  }

 private:
  Rng rng_;
  bool flip_;
};

}  // namespace

ModelSpec ModelSpec::gbm(double sigma) {
  ModelSpec m;
  m.kind = Kind::gbm;
  m.sigma = sigma;
  return m;
}

ModelSpec ModelSpec::cev(double sigma, double gamma) {
  ModelSpec m;
  m.kind = Kind::cev;
  m.sigma = sigma;
  m.gamma = gamma;
  return m;
}

ModelSpec ModelSpec::heston(double v0, double kappa, double theta, double eta,
                            double rho) {
  ModelSpec m;
  m.kind = Kind::heston;
  m.v0 = v0;
  m.kappa = kappa;
  m.theta = theta;
  m.eta = eta;
  m.rho = rho;
  return m;
}

const char* ModelSpec::tag() const {
  switch (kind) {
    case Kind::gbm: return "gbm";
    case Kind::cev: return "cev";
    case Kind::heston: return "heston";
  }
  return "?";
}

void ModelSpec::validate() const {
  auto fail = [](const char* msg) { throw std::invalid_argument(msg); };
  switch (kind) {
    case Kind::gbm:
      if (!(sigma > 0.0)) fail("gbm: sigma must be > 0");
      break;
    case Kind::cev:
      if (!(sigma > 0.0)) fail("cev: sigma must be > 0");
      if (!(gamma > 0.0)) fail("cev: gamma must be > 0");
      break;
    case Kind::heston:
      if (!(v0 > 0.0)) fail("heston: v0 must be > 0");
      if (!(kappa > 0.0)) fail("heston: kappa must be > 0");
      if (!(theta > 0.0)) fail("heston: theta must be > 0");
      if (!(eta > 0.0)) fail("heston: eta must be > 0");
      if (!(rho >= -1.0 && rho <= 1.0)) fail("heston: rho must lie in [-1,1]");
      break;
  }
}

int GridSpec::n_steps() const {
  long n = std::lround(static_cast<double>(steps_per_year) * maturity_years);
  return static_cast<int>(std::max(1l, n));
}

void GridSpec::validate() const {
  auto fail = [](const char* msg) { throw std::invalid_argument(msg); };
  if (steps_per_year <= 0) fail("grid: steps_per_year must be positive");
  if (!(maturity_years > 0.0)) fail("grid: maturity_years must be > 0");
  if (n_paths <= 0) fail("grid: n_paths must be positive");
  if (antithetic && n_paths % 2 != 0) fail("grid: antithetic needs even n_paths");
}

PathSet simulate_gbm(double s0, const ModelSpec& model, const GridSpec& grid,
                     double rate) {
  model.validate();
  if (model.kind != ModelSpec::Kind::gbm)
    throw std::invalid_argument("simulate_gbm: wrong model kind");
  check_common(s0, grid);

  PathSet ps = make_path_set(s0, grid, false, 0.0);
  const int N = ps.n_steps;
  const double h = ps.step_years;
  const double drift = (rate - 0.5 * model.sigma * model.sigma) * h;
  const double vol = model.sigma * std::sqrt(h);

  for (int p = 0; p < ps.n_paths; ++p) {
    NormalSource z(grid, p);
    double s = s0;
    ps.stock[ps.idx(p, 0)] = s;
    for (int i = 1; i <= N; ++i) {
      s *= std::exp(drift + vol * z.next());
      ps.stock[ps.idx(p, i)] = s;
    }
  }
  return ps;
}

PathSet simulate_cev(double s0, const ModelSpec& model, const GridSpec& grid,
                     double rate) {
  model.validate();
  if (model.kind != ModelSpec::Kind::cev)
    throw std::invalid_argument("simulate_cev: wrong model kind");
  check_common(s0, grid);

  PathSet ps = make_path_set(s0, grid, false, 0.0);
  const int N = ps.n_steps;
  const double h = ps.step_years;
  const double sqh = std::sqrt(h);

  for (int p = 0; p < ps.n_paths; ++p) {
    NormalSource z(grid, p);
    double s = s0;
    ps.stock[ps.idx(p, 0)] = s;
    for (int i = 1; i <= N; ++i) {
      s += rate * s * h + model.sigma * std::pow(s, model.gamma) * sqh * z.next();
      s = std::max(s, kStockFloor);
      ps.stock[ps.idx(p, i)] = s;
    }
  }
  return ps;
}

PathSet simulate_heston(double s0, const ModelSpec& model, const GridSpec& grid,
                        double rate) {
  model.validate();
  if (model.kind != ModelSpec::Kind::heston)
    throw std::invalid_argument("simulate_heston: wrong model kind");
  check_common(s0, grid);

  PathSet ps = make_path_set(s0, grid, true, model.v0);
  const int N = ps.n_steps;
  const double h = ps.step_years;
  const double sqh = std::sqrt(h);
  const double rho = model.rho;
  const double rho_c = std::sqrt(std::max(0.0, 1.0 - rho * rho));

  for (int p = 0; p < ps.n_paths; ++p) {
    NormalSource z(grid, p);
    double s = s0;
    // Full truncation: the internal variance state may run negative, the
    // stored/used variance is its positive part.
    double v_raw = model.v0;
    ps.stock[ps.idx(p, 0)] = s;
    ps.variance[ps.idx(p, 0)] = model.v0;
    for (int i = 1; i <= N; ++i) {
      double z1 = z.next();
      double z2 = z.next();
      double zs = z1;
      double zv = rho * z1 + rho_c * z2;
      double vp = std::max(v_raw, 0.0);
      s *= std::exp((rate - 0.5 * vp) * h + std::sqrt(vp * h) * zs);
      v_raw += model.kappa * (model.theta - vp) * h + model.eta * std::sqrt(vp) * sqh * zv;
      ps.stock[ps.idx(p, i)] = s;
      ps.variance[ps.idx(p, i)] = std::max(v_raw, 0.0);
    }
  }
  return ps;
}

PathSet simulate(double s0, const ModelSpec& model, const GridSpec& grid,
                 double rate) {
  switch (model.kind) {
    case ModelSpec::Kind::gbm: return simulate_gbm(s0, model, grid, rate);
    case ModelSpec::Kind::cev: return simulate_cev(s0, model, grid, rate);
    case ModelSpec::Kind::heston: return simulate_heston(s0, model, grid, rate);
  }
  throw std::logic_error("simulate: unknown model kind");
}

DriftCheck discounted_drift_check(const PathSet& paths, double rate) {
  DriftCheck out;
  const int M = paths.n_paths;
  for (int i = 1; i <= paths.n_steps; ++i) {
    double disc = std::exp(-rate * paths.step_years * i);
    double sum = 0.0, sum2 = 0.0;
    for (int p = 0; p < M; ++p) {
      double x = disc * paths.S(p, i);
      sum += x;
      sum2 += x * x;
    }
    double mean = sum / M;
    double var = std::max(0.0, sum2 / M - mean * mean);
    double se = std::sqrt(var / M);
    if (se == 0.0) continue;
    double z = std::fabs(mean - paths.s0) / se;
    if (z > out.max_abs_z) {
      out.max_abs_z = z;
      out.worst_step = i;
    }
  }
  return out;
}

void dump_paths_csv(const PathSet& paths, std::ostream& out) {
  out << "path,step,S";
  if (paths.has_variance()) out << ",v";
  if (paths.augmented) out << ",H";
  out << "\n";
  char buf[64];
  for (int p = 0; p < paths.n_paths; ++p) {
    for (int i = 0; i <= paths.n_steps; ++i) {
      out << p << ',' << i;
      std::snprintf(buf, sizeof buf, ",%.10g", paths.S(p, i));
      out << buf;
      if (paths.has_variance()) {
        std::snprintf(buf, sizeof buf, ",%.10g", paths.v(p, i));
        out << buf;
      }
      if (paths.augmented) {
        std::snprintf(buf, sizeof buf, ",%.10g", paths.H(p, i));
        out << buf;
      }
      out << "\n";
    }
  }
}

}  // namespace cb
