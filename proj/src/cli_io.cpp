#include "anyonvlasov/cli_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "anyonvlasov/coherent_husimi.hpp"
#include "anyonvlasov/diaconis_freedman.hpp"
#include "anyonvlasov/grid.hpp"
#include "anyonvlasov/hartree_fock.hpp"
#include "anyonvlasov/kernels.hpp"
#include "anyonvlasov/rng.hpp"
#include "anyonvlasov/tf_solver.hpp"
#include "anyonvlasov/vlasov.hpp"

namespace anyv::cli {

using nlohmann::json;
namespace fs = std::filesystem;

void ScalingRegime::validate() const {
  if (particles < 1) throw UsageError("scaling regime: particles must be at least 1");
  if (!std::isfinite(beta)) throw UsageError("scaling regime: beta must be finite");
  if (!(radius_exponent > 0.0) || !(radius_exponent < 0.25))
    throw UsageError("scaling regime: radius exponent must lie strictly between 0 and 1/4");
}

double ScalingRegime::hbar() const { return 1.0 / std::sqrt(static_cast<double>(particles)); }
double ScalingRegime::alpha() const { return beta / static_cast<double>(particles); }
double ScalingRegime::radius() const {
  return std::pow(static_cast<double>(particles), -radius_exponent);
}

namespace {

// ---------------------------------------------------------------------------
// Config validation.

enum class FieldType { number, integer, string, boolean };

struct FieldSpec {
  const char* key;
  FieldType type;
  bool required;
};

void validate_fields(const json& cfg, const std::string& verb,
                     const std::vector<FieldSpec>& specs) {
  if (!cfg.is_object()) throw UsageError(verb + ": configuration must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    const FieldSpec* spec = nullptr;
    for (const auto& s : specs)
      if (key == s.key) {
        spec = &s;
        break;
      }
    if (spec == nullptr) throw UsageError(verb + "." + key + ": unknown key");
    const bool ok = [&] {
      switch (spec->type) {
        case FieldType::number:
          return value.is_number();
        case FieldType::integer:
          return value.is_number_integer();
        case FieldType::string:
          return value.is_string();
        case FieldType::boolean:
          return value.is_boolean();
      }
      return false;
    }();
    if (!ok) throw UsageError(verb + "." + key + ": wrong type");
  }
  for (const auto& s : specs)
    if (s.required && !cfg.contains(s.key))
      throw UsageError(verb + "." + std::string(s.key) + ": required key missing");
}

// ---------------------------------------------------------------------------
// Output helpers.

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::string& header) : out_(path) {
    if (!out_) throw NumericFailure("cannot open output file " + path.string());
    out_ << header << '\n';
  }

  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) out_ << ',';
      out_ << format_value(v);
      first = false;
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void write_json(const fs::path& path, const json& value) {
  std::ofstream out(path);
  if (!out) throw NumericFailure("cannot open output file " + path.string());
  out << value.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Shared pieces.

tf::Trap trap_from(const json& cfg, const std::string& verb) {
  const std::string name = cfg.value("trap", "harmonic");
  if (name == "harmonic") return tf::Trap::harmonic();
  if (name == "quartic") return tf::Trap::power(4.0, 1.0);
  if (name == "power") {
    if (!cfg.contains("trap_power")) throw UsageError(verb + ".trap_power: required for power traps");
    return tf::Trap::power(cfg.at("trap_power").get<double>(),
                           cfg.value("trap_coefficient", 1.0));
  }
  throw UsageError(verb + ".trap: must be harmonic, quartic, or power");
}

const std::vector<FieldSpec> kTrapFields = {
    {"trap", FieldType::string, false},
    {"trap_power", FieldType::number, false},
    {"trap_coefficient", FieldType::number, false},
};

std::vector<FieldSpec> with_trap(std::vector<FieldSpec> specs) {
  specs.insert(specs.end(), kTrapFields.begin(), kTrapFields.end());
  return specs;
}

struct KernelChoice {
  kernels::SmearingProfile profile;
  kernels::RadialKernel table;
  kernels::GaugeKernelRef ref;
};

// radius == 0 selects the pointlike kernel.
KernelChoice kernel_from(double radius) {
  KernelChoice choice;
  if (radius > 0.0) {
    choice.profile = kernels::build_profile();
    choice.table = kernels::radial_kernel(choice.profile, radius);
    choice.ref = kernels::GaugeKernelRef{&choice.table};
  }  // default-constructed ref is the pointlike kernel
  return choice;
}

coherent::SlaterState state_from(const json& cfg, const std::string& verb, const Grid2D& grid,
                                 double hbar, std::uint64_t seed) {
  const std::string kind = cfg.value("state", "ho");
  const int count = cfg.at("orbital_count").get<int>();
  if (count < 1) throw UsageError(verb + ".orbital_count: must be positive");
  if (kind == "ho") return coherent::ho_slater_state(grid, hbar, count);
  if (kind == "random") return coherent::random_slater_state(grid, count, seed);
  throw UsageError(verb + ".state: must be ho or random");
}

// ---------------------------------------------------------------------------
// Verb handlers. Each returns the list of files it wrote.

std::vector<std::string> run_tf_solve(const json& cfg, std::uint64_t, const fs::path& dir) {
  validate_fields(cfg, "tf-solve",
                  with_trap({{"mass", FieldType::number, false},
                             {"half_width", FieldType::number, true},
                             {"nodes", FieldType::integer, true},
                             {"tolerance", FieldType::number, false}}));
  const tf::Trap trap = trap_from(cfg, "tf-solve");
  const double mass = cfg.value("mass", 1.0);
  const Grid2D grid = Grid2D::centered_cells(cfg.at("half_width").get<double>(),
                                             cfg.at("nodes").get<int>());
  const tf::TFSolution sol = tf::solve_tf(trap, mass, grid, cfg.value("tolerance", 1e-10));

  CsvFile density(dir / "density.csv", "x,y,rho");
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      density.row({grid.x(i), grid.y(j), sol.rho.values[grid.idx(i, j)]});

  write_json(dir / "summary.json", json{{"lambda", sol.lambda},
                                        {"energy", sol.energy},
                                        {"mass", sol.mass},
                                        {"target_mass", mass}});
  return {"density.csv", "summary.json"};
}

std::vector<std::string> run_vlasov_energy(const json& cfg, std::uint64_t, const fs::path& dir) {
  validate_fields(cfg, "vlasov-energy",
                  with_trap({{"mass", FieldType::number, false},
                             {"half_width", FieldType::number, true},
                             {"nodes", FieldType::integer, true},
                             {"beta", FieldType::number, false},
                             {"radius", FieldType::number, false},
                             {"p_nodes", FieldType::integer, false},
                             {"p_margin", FieldType::number, false}}));
  const tf::Trap trap = trap_from(cfg, "vlasov-energy");
  const Grid2D grid = Grid2D::centered_cells(cfg.at("half_width").get<double>(),
                                             cfg.at("nodes").get<int>());
  const tf::TFSolution sol = tf::solve_tf(trap, cfg.value("mass", 1.0), grid);

  const KernelChoice kernel = kernel_from(cfg.value("radius", 0.0));
  vlasov::VlasovSetup setup;
  setup.trap = trap;
  setup.beta = cfg.value("beta", 0.0);
  setup.kernel = kernel.ref;

  const Grid2D p_grid =
      vlasov::fit_p_grid(sol.rho, setup, cfg.value("p_nodes", 64), cfg.value("p_margin", 1.1));
  const vlasov::PhaseSpaceDensity minimizer = vlasov::build_minimizer(sol.rho, setup, p_grid);
  const double energy = vlasov::vlasov_energy(minimizer, setup);
  const vlasov::PauliMassReport report = vlasov::pauli_and_mass_report(minimizer);

  CsvFile balls(dir / "balls.csv", "x,y,center_px,center_py,radius");
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const auto& ball = minimizer.balls[grid.idx(i, j)];
      balls.row({grid.x(i), grid.y(j), ball.center.x, ball.center.y, ball.radius});
    }

  write_json(dir / "summary.json", json{{"tf_lambda", sol.lambda},
                                        {"tf_energy", sol.energy},
                                        {"vlasov_energy", energy},
                                        {"beta", setup.beta},
                                        {"mass_ratio", report.mass_ratio},
                                        {"pauli_max", report.max_value},
                                        {"violation_count", report.violation_count}});
  return {"balls.csv", "summary.json"};
}

std::vector<std::string> run_momentum_dist(const json& cfg, std::uint64_t, const fs::path& dir) {
  validate_fields(cfg, "momentum-dist",
                  with_trap({{"mass", FieldType::number, false},
                             {"half_width", FieldType::number, true},
                             {"nodes", FieldType::integer, true},
                             {"beta", FieldType::number, false},
                             {"radius", FieldType::number, false},
                             {"out_p_nodes", FieldType::integer, false},
                             {"out_p_half_width", FieldType::number, false}}));
  const tf::Trap trap = trap_from(cfg, "momentum-dist");
  const Grid2D grid = Grid2D::centered_cells(cfg.at("half_width").get<double>(),
                                             cfg.at("nodes").get<int>());
  const tf::TFSolution sol = tf::solve_tf(trap, cfg.value("mass", 1.0), grid);

  const KernelChoice kernel = kernel_from(cfg.value("radius", 0.0));
  vlasov::VlasovSetup setup;
  setup.trap = trap;
  setup.beta = cfg.value("beta", 0.0);
  setup.kernel = kernel.ref;

  double p_half = cfg.value("out_p_half_width", 0.0);
  if (p_half <= 0.0) {
    // Just beyond the largest momentum disc.
    const VectorField2D a_tot = vlasov::total_gauge_field(sol.rho, setup);
    for (std::size_t k = 0; k < sol.rho.values.size(); ++k) {
      const double reach =
          std::hypot(a_tot.comp_x[k], a_tot.comp_y[k]) +
          std::sqrt(4.0 * kPi * std::max(0.0, sol.rho.values[k]));
      p_half = std::max(p_half, reach);
    }
    p_half *= 1.05;
  }
  const int p_nodes = cfg.value("out_p_nodes", 64);
  const Grid2D p_grid = Grid2D::centered_cells(p_half, p_nodes);

  std::vector<Vec2> points;
  points.reserve(p_grid.size());
  for (int j = 0; j < p_grid.ny; ++j)
    for (int i = 0; i < p_grid.nx; ++i) points.push_back({p_grid.x(i), p_grid.y(j)});
  const std::vector<double> t = vlasov::momentum_distribution(sol.rho, setup, points);

  CsvFile csv(dir / "momentum.csv", "px,py,t");
  double integral = 0.0;
  double origin = 0.0;
  double best = std::numeric_limits<double>::max();
  for (std::size_t k = 0; k < points.size(); ++k) {
    csv.row({points[k].x, points[k].y, t[k]});
    integral += t[k] * p_grid.h * p_grid.h;
    const double d = points[k].norm2();
    if (d < best) {
      best = d;
      origin = t[k];
    }
  }

  write_json(dir / "summary.json", json{{"tf_lambda", sol.lambda},
                                        {"beta", setup.beta},
                                        {"integral", integral},
                                        {"t_near_origin", origin},
                                        {"p_half_width", p_half}});
  return {"momentum.csv", "summary.json"};
}

std::vector<std::string> run_husimi(const json& cfg, std::uint64_t seed, const fs::path& dir) {
  validate_fields(cfg, "husimi",
                  {{"hbar", FieldType::number, true},
                   {"hbar_x", FieldType::number, false},
                   {"orbital_count", FieldType::integer, true},
                   {"state", FieldType::string, false},
                   {"half_width", FieldType::number, true},
                   {"nodes", FieldType::integer, true},
                   {"phase_nodes", FieldType::integer, true},
                   {"phase_half_width_x", FieldType::number, true},
                   {"phase_half_width_p", FieldType::number, true}});
  const double hbar = cfg.at("hbar").get<double>();
  const Grid2D grid = Grid2D::centered_cells(cfg.at("half_width").get<double>(),
                                             cfg.at("nodes").get<int>());
  const coherent::SlaterState state = state_from(cfg, "husimi", grid, hbar, seed);
  coherent::SqueezedScales scales{hbar, cfg.value("hbar_x", hbar)};

  const int pn = cfg.at("phase_nodes").get<int>();
  const Grid2D xg = Grid2D::centered_cells(cfg.at("phase_half_width_x").get<double>(), pn);
  const Grid2D pg = Grid2D::centered_cells(cfg.at("phase_half_width_p").get<double>(), pn);

  const auto m = coherent::husimi_on_product_grid(state, scales, xg, pg);
  CsvFile csv(dir / "husimi.csv", "x,y,px,py,m");
  double max_m = 0.0;
  for (int by = 0; by < xg.ny; ++by)
    for (int ax = 0; ax < xg.nx; ++ax)
      for (int p2 = 0; p2 < pg.ny; ++p2)
        for (int p1 = 0; p1 < pg.nx; ++p1) {
          const double v =
              m[((static_cast<std::size_t>(by) * xg.nx + ax) * pg.ny + p2) * pg.nx + p1];
          max_m = std::max(max_m, v);
          csv.row({xg.x(ax), xg.y(by), pg.x(p1), pg.y(p2), v});
        }

  double total = 0.0;
  for (double v : m) total += v;
  const double resolution = total * xg.h * xg.h * pg.h * pg.h /
                            (kTwoPi * hbar * kTwoPi * hbar);

  write_json(dir / "summary.json", json{{"orbital_count", state.count()},
                                        {"resolution_integral", resolution},
                                        {"max_value", max_m},
                                        {"gram_defect", state.gram_defect()}});
  return {"husimi.csv", "summary.json"};
}

std::vector<std::string> run_hf_energy(const json& cfg, std::uint64_t seed, const fs::path& dir) {
  validate_fields(cfg, "hf-energy",
                  with_trap({{"state", FieldType::string, false},
                             {"orbital_count", FieldType::integer, true},
                             {"half_width", FieldType::number, true},
                             {"nodes", FieldType::integer, true},
                             {"field_b", FieldType::number, false},
                             {"particles", FieldType::integer, false},
                             {"beta", FieldType::number, false},
                             {"radius_exponent", FieldType::number, false},
                             {"hbar", FieldType::number, false},
                             {"alpha", FieldType::number, false},
                             {"radius", FieldType::number, false}}));

  double hbar = 0.0, alpha = 0.0, radius = 0.0;
  const bool derived = cfg.contains("particles");
  if (derived) {
    if (cfg.contains("hbar") || cfg.contains("alpha") || cfg.contains("radius"))
      throw UsageError(
          "hf-energy: give either particles/beta/radius_exponent or hbar/alpha/radius");
    ScalingRegime regime;
    regime.particles = cfg.at("particles").get<long>();
    regime.beta = cfg.value("beta", 0.0);
    regime.radius_exponent = cfg.value("radius_exponent", 0.125);
    regime.validate();
    hbar = regime.hbar();
    alpha = regime.alpha();
    radius = regime.radius();
  } else {
    if (!cfg.contains("hbar")) throw UsageError("hf-energy.hbar: required key missing");
    if (cfg.contains("beta") || cfg.contains("radius_exponent"))
      throw UsageError(
          "hf-energy: give either particles/beta/radius_exponent or hbar/alpha/radius");
    hbar = cfg.at("hbar").get<double>();
    alpha = cfg.value("alpha", 0.0);
    radius = cfg.value("radius", 0.0);
  }

  const Grid2D grid = Grid2D::centered_cells(cfg.at("half_width").get<double>(),
                                             cfg.at("nodes").get<int>());
  const coherent::SlaterState state = state_from(cfg, "hf-energy", grid, hbar, seed);

  const KernelChoice kernel = kernel_from(radius);
  hf::InteractionOperators ops;
  ops.hbar = hbar;
  ops.alpha = alpha;
  ops.trap = trap_from(cfg, "hf-energy");
  ops.kernel = kernel.ref;
  const double field_b = cfg.value("field_b", 0.0);
  if (field_b != 0.0)
    ops.external_field = [field_b](Vec2 x) {
      return Vec2{-0.5 * field_b * x.y, 0.5 * field_b * x.x};
    };

  const hf::HFEnergyBreakdown breakdown = hf::hf_energy(state, ops);

  DensityField gamma;
  gamma.grid = grid;
  gamma.values.assign(grid.size(), 0.0);
  for (const auto& psi : state.orbitals)
    for (std::size_t i = 0; i < psi.size(); ++i) gamma.values[i] += std::norm(psi[i]);
  const double trace = hf::magnetic_kinetic_trace(state, ops);
  const double hartree = hf::hartree_energy(gamma, trace, ops.trap);
  const double exchange_free =
      breakdown.total() - breakdown.mixed_exchange - breakdown.singular_two_body_exchange -
      breakdown.three_body_exchange_single - breakdown.three_body_exchange_cyclic -
      breakdown.singular_two_body_direct;

  write_json(dir / "summary.json",
             json{{"kinetic_potential", breakdown.kinetic_potential},
                  {"mixed_direct", breakdown.mixed_direct},
                  {"mixed_exchange", breakdown.mixed_exchange},
                  {"singular_two_body_direct", breakdown.singular_two_body_direct},
                  {"singular_two_body_exchange", breakdown.singular_two_body_exchange},
                  {"three_body_direct", breakdown.three_body_direct},
                  {"three_body_exchange_single", breakdown.three_body_exchange_single},
                  {"three_body_exchange_cyclic", breakdown.three_body_exchange_cyclic},
                  {"total", breakdown.total()},
                  {"hartree", hartree},
                  {"hartree_identity_residual",
                   exchange_free - hartree * state.count()},
                  {"hbar", hbar},
                  {"alpha", alpha},
                  {"radius", radius}});
  return {"summary.json"};
}

std::vector<std::string> run_df_check(const json& cfg, std::uint64_t seed, const fs::path& dir) {
  validate_fields(cfg, "df-check",
                  {{"states", FieldType::integer, false},
                   {"particles", FieldType::integer, false},
                   {"arity", FieldType::integer, false},
                   {"draws", FieldType::integer, false},
                   {"resolution", FieldType::integer, false}});
  const int states = cfg.value("states", 3);
  const int particles = cfg.value("particles", 4);
  const int arity = cfg.value("arity", 2);
  const int draws = cfg.value("draws", 20);
  const int resolution = cfg.value("resolution", 1000);
  if (states < 2 || particles < 2 || arity < 1 || draws < 1)
    throw UsageError("df-check: states/particles/draws must be at least 2/2/1");

  CsvFile csv(dir / "df.csv", "draw,tv,bound");
  bool within = true;
  bool closed_matches = true;
  double max_tv = 0.0;
  const df::BigRat bound = df::resampling_tv_bound(arity, particles);
  for (int d = 0; d < draws; ++d) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
    const df::DiscreteMeasure mu = df::random_symmetric_measure(states, particles, rng, resolution);
    const df::DiscreteMeasure resampled = df::df_resample(mu, arity);
    if (arity <= 3) {
      const df::DiscreteMeasure closed = df::df_resample_closed_form(mu, arity);
      if (closed.weights != resampled.weights) closed_matches = false;
    }
    const df::BigRat tv = df::tv_distance(resampled, df::marginal(mu, arity));
    if (tv > bound) within = false;
    const double tv_d = static_cast<double>(tv);
    max_tv = std::max(max_tv, tv_d);
    csv.row({static_cast<double>(d), tv_d, static_cast<double>(bound)});
  }

  write_json(dir / "summary.json", json{{"draws", draws},
                                        {"states", states},
                                        {"particles", particles},
                                        {"arity", arity},
                                        {"max_tv", max_tv},
                                        {"tv_bound", static_cast<double>(bound)},
                                        {"all_within_bound", within},
                                        {"closed_form_checked", arity <= 3},
                                        {"closed_form_matches", closed_matches}});
  return {"df.csv", "summary.json"};
}

std::vector<std::string> run_pauli_mc(const json& cfg, std::uint64_t seed, const fs::path& dir) {
  validate_fields(cfg, "pauli-mc",
                  {{"particles", FieldType::integer, true},
                   {"eps", FieldType::number, true},
                   {"trials", FieldType::integer, true},
                   {"tiling_exponent", FieldType::number, false},
                   {"lambda", FieldType::number, false},
                   {"arity_cap", FieldType::integer, false}});
  const long particles = cfg.at("particles").get<long>();
  const double eps = cfg.at("eps").get<double>();
  const long trials = cfg.at("trials").get<long>();
  const double exponent = cfg.value("tiling_exponent", 3.0 / 16.0);
  const double lambda = cfg.value("lambda", 2.0 * std::sqrt(2.0));
  if (particles < 1 || trials < 1) throw UsageError("pauli-mc: counts must be positive");
  if (!(eps > 0.0)) throw UsageError("pauli-mc.eps: must be positive");
  if (!(exponent > 0.0)) throw UsageError("pauli-mc.tiling_exponent: must be positive");

  const double step = std::pow(static_cast<double>(particles), -exponent);
  df::Tiling tiling;
  tiling.l_x = tiling.l_p = step;
  tiling.per_axis = static_cast<int>(std::ceil(std::sqrt(lambda) / step));

  const auto sampler = [particles, lambda](Rng& rng) {
    return df::harmonic_semiclassical_sample(static_cast<int>(particles), lambda, rng);
  };
  const df::ViolationEstimate estimate = df::mc_violation_probability(
      sampler, tiling, static_cast<int>(particles), eps, trials, seed);

  const double hbar = 1.0 / std::sqrt(static_cast<double>(particles));
  const df::OptimalBound best = df::best_violation_bound(
      static_cast<int>(particles), hbar, tiling.cell_volume(), eps, cfg.value("arity_cap", 64));
  const double union_bound = static_cast<double>(tiling.tile_count()) * best.bound;

  write_json(dir / "summary.json",
             json{{"particles", particles},
                  {"eps", eps},
                  {"trials", trials},
                  {"estimate", estimate.estimate},
                  {"wilson_lower", estimate.lower},
                  {"wilson_upper", estimate.upper},
                  {"threshold_count", estimate.threshold_count},
                  {"tile_step", step},
                  {"tile_count", tiling.tile_count()},
                  {"cell_volume", tiling.cell_volume()},
                  {"best_arity", best.arity},
                  {"best_tile_bound", best.bound},
                  {"union_bound", union_bound}});
  return {"summary.json"};
}

}  // namespace

nlohmann::json apply_overrides(nlohmann::json config, const std::vector<std::string>& overrides) {
  if (!config.is_object()) throw UsageError("configuration must be a JSON object");
  for (const auto& item : overrides) {
    const auto pos = item.find('=');
    if (pos == std::string::npos || pos == 0)
      throw UsageError("override '" + item + "' is not of the form key=value");
    const std::string key = item.substr(0, pos);
    const std::string value = item.substr(pos + 1);
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded() || parsed.is_object() || parsed.is_array())
      parsed = value;  // plain string
    config[key] = parsed;
  }
  return config;
}

const std::vector<std::string>& known_verbs() {
  static const std::vector<std::string> verbs = {
      "tf-solve",     "vlasov-energy", "momentum-dist", "husimi",
      "hf-energy",    "df-check",      "pauli-mc"};
  return verbs;
}

RunResult run_verb(const std::string& verb, nlohmann::json config, std::uint64_t seed,
                   const std::string& out_dir) {
  using Handler =
      std::vector<std::string> (*)(const json&, std::uint64_t, const fs::path&);
  RunResult result;
  try {
    Handler handler = nullptr;
    if (verb == "tf-solve") handler = run_tf_solve;
    else if (verb == "vlasov-energy") handler = run_vlasov_energy;
    else if (verb == "momentum-dist") handler = run_momentum_dist;
    else if (verb == "husimi") handler = run_husimi;
    else if (verb == "hf-energy") handler = run_hf_energy;
    else if (verb == "df-check") handler = run_df_check;
    else if (verb == "pauli-mc") handler = run_pauli_mc;
    if (handler == nullptr) throw UsageError("unknown verb '" + verb + "'");

    const fs::path dir(out_dir);
    fs::create_directories(dir);

    const auto start = std::chrono::steady_clock::now();
    result.outputs = handler(config, seed, dir);
    const auto stop = std::chrono::steady_clock::now();
    const double wall_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(stop - start)
            .count();

    json manifest{{"verb", verb},
                  {"code_version", kCodeVersion},
                  {"seed", seed},
                  {"wall_time_ms", wall_ms},
                  {"config", config},
                  {"outputs", result.outputs}};
    write_json(dir / "manifest.json", manifest);
    result.outputs.push_back("manifest.json");
    result.exit_code = 0;
  } catch (const UsageError& e) {
    result.exit_code = 2;
    result.message = e.what();
  } catch (const nlohmann::json::exception& e) {
    result.exit_code = 2;
    result.message = e.what();
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.message = e.what();
  }
  return result;
}

}  // namespace anyv::cli
