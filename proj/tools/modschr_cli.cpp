// modschr: command-line front end.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or input error.
// Every output file is written to a temporary name and renamed into place
// only after all results are computed, so a failed run leaves no partial files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "modschr/modschr.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace modschr;

namespace {

/// Bad flag values discovered after parsing; exits with 2 like a parse error.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Output staged in memory until the whole run has succeeded.
class OutputSet {
public:
  void add(fs::path path, std::string content)
  {
    files_.emplace_back(std::move(path), std::move(content));
  }

  void commit() const
  {
    std::vector<std::pair<fs::path, fs::path>> staged;
    try {
      for (const auto& [path, content] : files_) {
        fs::path tmp = path;
        tmp += ".tmp." + std::to_string(::getpid());
        std::ofstream out(tmp, std::ios::binary);
        out << content;
        out.close();
        staged.emplace_back(tmp, path);
        if (!out)
          throw std::runtime_error("cannot write " + path.string());
      }
    } catch (...) {
      for (const auto& [tmp, path] : staged)
        fs::remove(tmp);
      throw;
    }
    for (const auto& [tmp, path] : staged)
      fs::rename(tmp, path);
  }

private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

void require_readable(const std::string& flag, const std::string& path)
{
  if (!fs::is_regular_file(path))
    throw UsageError(flag + ": no such file '" + path + "'");
}

void require_writable_target(const std::string& flag, const fs::path& path)
{
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::is_directory(dir))
    throw UsageError(flag + ": directory '" + dir.string() + "' does not exist");
}

std::ifstream open_input(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot open '" + path + "'");
  return in;
}

template <class F>
std::string render(F&& f)
{
  std::ostringstream os;
  f(os);
  return os.str();
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

Grid make_grid(const std::vector<std::size_t>& shape, const std::vector<double>& spacing,
               const std::vector<double>& origin)
{
  try {
    return Grid(shape, spacing, origin);
  } catch (const std::exception& e) {
    throw UsageError(std::string("--shape/--spacing/--origin: ") + e.what());
  }
}

json grid_json(const Grid& g)
{
  json j;
  for (std::size_t a = 0; a < g.dims(); ++a) {
    j["shape"].push_back(g.shape(a));
    j["spacing_m"].push_back(g.spacing(a));
    j["origin_m"].push_back(g.origin(a));
  }
  return j;
}

// ---------------------------------------------------------------------------
// eikonal

struct EikonalArgs {
  std::vector<std::size_t> shape;
  std::vector<double> spacing{1.0};
  std::vector<double> origin;
  std::optional<double> speed;
  std::string speed_map;
  std::vector<std::string> sources;
  std::optional<double> source_radius;
  std::string output;
  bool verify = false;
  std::optional<double> verify_exclusion;
};

Grid::Index parse_cell(const std::string& text, const Grid& g)
{
  Grid::Index idx{0, 0, 0};
  std::size_t a = 0;
  for (const auto& part : csv::split(text)) {
    if (a >= g.dims())
      throw UsageError("--source '" + text + "' has more indices than the grid has axes");
    try {
      idx[a++] = csv::parse_index(part, 0);
    } catch (const CsvError&) {
      throw UsageError("--source '" + text + "' must be comma-separated cell indices");
    }
  }
  if (a != g.dims())
    throw UsageError("--source '" + text + "' needs one index per axis");
  for (std::size_t b = 0; b < g.dims(); ++b)
    if (idx[b] >= g.shape(b))
      throw UsageError("--source '" + text + "' lies outside the grid");
  return idx;
}

int cmd_eikonal(const EikonalArgs& args)
{
  const Grid g = make_grid(args.shape, args.spacing, args.origin);
  require_writable_target("--output", args.output);
  if (args.speed.has_value() == !args.speed_map.empty())
    throw UsageError("give exactly one of --speed or --speed-map");
  if (!args.speed_map.empty())
    require_readable("--speed-map", args.speed_map);
  if (args.source_radius && !(*args.source_radius >= 0.0))
    throw UsageError("--source-radius must be non-negative");

  SourceSpec source;
  for (const auto& s : args.sources)
    source.cells.push_back(g.flat(parse_cell(s, g)));
  if (source.cells.empty())
    source = SourceSpec::center(g);

  std::optional<SpeedModel> speed;
  if (args.speed) {
    if (!(*args.speed > 0.0) || !std::isfinite(*args.speed))
      throw UsageError("--speed must be a positive speed in m/s");
    speed.emplace(*args.speed);
  } else {
    auto in = open_input(args.speed_map);
    ScalarField map = read_scalar_csv(in, args.spacing, args.origin);
    if (!(map.grid() == g))
      throw UsageError("--speed-map grid does not match --shape/--spacing/--origin");
    speed.emplace(std::move(map));
  }

  FastMarchingOptions opts;
  opts.source_radius = args.source_radius.value_or(default_source_radius(g));
  const TraveltimeField tt = solve_traveltime(g, source, *speed, opts);

  double tmin = std::numeric_limits<double>::infinity(), tmax = 0.0;
  for (double t : tt.times().values()) {
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }

  json report{{"cells", g.size()},
              {"source_cells", source.cells.size()},
              {"source_radius_m", opts.source_radius},
              {"t_p_min_s", tmin},
              {"t_p_max_s", tmax}};

  if (args.verify) {
    if (!speed->is_constant() || source.cells.size() != 1)
      throw UsageError("--verify-analytic needs a constant --speed and a single --source");
    const double exclusion = args.verify_exclusion.value_or(5.0 * g.min_spacing());
    const auto src = g.unflatten(source.cells.front());
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto idx = g.unflatten(i);
      double r2 = 0.0;
      for (std::size_t a = 0; a < g.dims(); ++a) {
        const double d = g.coordinate(a, idx[a]) - g.coordinate(a, src[a]);
        r2 += d * d;
      }
      const double r = std::sqrt(r2);
      if (r <= exclusion)
        continue;
      const double exact = r / speed->at(i);
      worst = std::max(worst, std::abs(tt[i] - exact) / exact);
    }
    report["analytic_exclusion_radius_m"] = exclusion;
    report["analytic_max_relative_error"] = worst;
  }

  OutputSet out;
  out.add(args.output, render([&](std::ostream& os) { write_csv(os, tt.times()); }));
  out.commit();
  std::cout << report.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// propagate

struct PropagateArgs {
  std::string mode = "classical";
  std::vector<std::size_t> shape;
  std::vector<double> spacing;
  std::vector<double> origin;
  std::string input;
  std::vector<double> packet_center;
  std::optional<double> packet_sigma;
  double packet_k = 0.0;
  std::string potential;
  std::string traveltime;
  double mass = codata2018.m_e;
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<std::size_t> output_steps;
  std::size_t history = 0;
  double solver_tolerance = 1e-12;
  std::string output_dir;
};

ComplexField initial_state(const PropagateArgs& args)
{
  if (!args.input.empty()) {
    auto in = open_input(args.input);
    return read_complex_csv(in, args.spacing, args.origin);
  }
  const Grid g = make_grid(args.shape, args.spacing, args.origin);
  std::vector<double> center = args.packet_center;
  if (center.empty())
    for (std::size_t a = 0; a < g.dims(); ++a)
      center.push_back(g.coordinate(a, (g.shape(a) - 1) / 2));
  if (center.size() != g.dims())
    throw UsageError("--packet-center needs one coordinate per axis");
  if (!(*args.packet_sigma > 0.0))
    throw UsageError("--packet-sigma must be positive");
  return make_gaussian_packet(g, center, *args.packet_sigma, args.packet_k);
}

int cmd_propagate(const PropagateArgs& args)
{
  if (args.spacing.empty())
    throw UsageError("--spacing is required");
  if (args.input.empty() == !args.packet_sigma.has_value())
    throw UsageError("give exactly one of --input or --packet-sigma");
  if (!args.input.empty())
    require_readable("--input", args.input);
  else if (args.shape.empty())
    throw UsageError("--shape is required with --packet-sigma");
  if (!args.potential.empty())
    require_readable("--potential", args.potential);
  const bool retarded = args.mode != "classical";
  if (retarded && args.traveltime.empty())
    throw UsageError("--mode " + args.mode + " needs --traveltime");
  if (!args.traveltime.empty())
    require_readable("--traveltime", args.traveltime);
  if (!fs::is_directory(args.output_dir))
    throw UsageError("--output-dir: directory '" + args.output_dir + "' does not exist");
  if (!(args.dt > 0.0) || !std::isfinite(args.dt))
    throw UsageError("--dt must be a positive time step in s");
  if (!(args.mass > 0.0) || !std::isfinite(args.mass))
    throw UsageError("--mass must be positive (kg)");

  std::vector<std::size_t> outputs = args.output_steps;
  if (outputs.empty())
    outputs.push_back(args.steps);
  std::sort(outputs.begin(), outputs.end());
  outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());
  if (outputs.back() > args.steps)
    throw UsageError("--output-steps must not exceed --steps");
  if (args.mode == "compare-a8" && args.steps < 2)
    throw UsageError("--mode compare-a8 needs --steps >= 2 for the time derivative");

  const ComplexField psi0 = initial_state(args);
  const Grid& g = psi0.grid();

  ScalarField potential(g, 0.0);
  if (!args.potential.empty()) {
    auto in = open_input(args.potential);
    potential = read_scalar_csv(in, args.spacing, args.origin);
    if (!(potential.grid() == g))
      throw UsageError("--potential grid does not match the initial state");
  }
  std::optional<TraveltimeField> tt;
  if (retarded) {
    auto in = open_input(args.traveltime);
    tt.emplace(read_scalar_csv(in, args.spacing, args.origin));
    if (!(tt->grid() == g))
      throw UsageError("--traveltime grid does not match the initial state");
  }

  const QuantumProblem problem(potential, args.mass, args.dt, codata2018,
                               {.tolerance = args.solver_tolerance});
  CrankNicolsonStepper stepper(problem);
  ClassicalSolution sol(psi0, args.dt, args.history);

  OutputSet files;
  json records = json::array();
  const auto name = [&](const std::string& stem, std::size_t k) {
    return (fs::path(args.output_dir) / (stem + "_step" + std::to_string(k) + ".csv")).string();
  };

  // compare-a8 needs one snapshot past the output time for the centered
  // derivative; it is emitted once that snapshot exists (or at the end).
  std::vector<std::size_t> pending = outputs;
  const auto emit = [&](std::size_t k) {
    const double t = sol.time(k);
    json rec{{"step", k}, {"time_s", t}};
    if (args.mode == "classical") {
      const auto f = name("psi", k);
      files.add(f, render([&](std::ostream& os) { write_csv(os, sol.snapshot(k)); }));
      rec["files"] = {f};
    } else if (args.mode == "modified") {
      const ComplexField mod = evaluate_modified(sol, *tt, t);
      std::size_t gated = 0, nonzero_gated = 0;
      for (std::size_t i = 0; i < mod.size(); ++i)
        if (t - (*tt)[i] < 0.0) {
          ++gated;
          nonzero_gated += mod[i] != complex(0.0);
        }
      const auto f = name("psi_modified", k);
      files.add(f, render([&](std::ostream& os) { write_csv(os, mod); }));
      rec["files"] = {f};
      rec["gated_cells"] = gated;
      rec["gated_cells_nonzero"] = nonzero_gated;
      rec["norm_squared"] = l2_norm_squared(mod);
    } else {
      const DifferenceEstimate d = difference_estimate(sol, *tt, t);
      const auto fa = name("delta_actual_abs", k), fp = name("delta_predicted_abs", k);
      files.add(fa, render([&](std::ostream& os) { write_csv(os, d.actual_abs); }));
      files.add(fp, render([&](std::ostream& os) { write_csv(os, d.predicted_abs); }));
      rec["files"] = {fa, fp};
      rec["residual_max"] = d.residual_max();
    }
    records.push_back(rec);
  };
  const auto flush = [&](std::size_t newest, bool final) {
    while (!pending.empty()) {
      const std::size_t k = pending.front();
      const bool ready = args.mode == "compare-a8" ? (k + 1 <= newest || final) : k <= newest;
      if (!ready)
        break;
      emit(k);
      pending.erase(pending.begin());
    }
  };

  flush(0, args.steps == 0);
  ComplexField current = psi0;
  for (std::size_t k = 1; k <= args.steps; ++k) {
    current = stepper.step(current);
    sol.push(current);
    flush(k, k == args.steps);
  }

  json manifest{{"mode", args.mode},
                {"dt_s", args.dt},
                {"n_steps", args.steps},
                {"mass_kg", args.mass},
                {"history_window", args.history},
                {"grid", grid_json(g)},
                {"norm",
                 {{"initial", sol.initial_norm()},
                  {"final", l2_norm_squared(sol.latest())},
                  {"max_relative_drift", sol.max_norm_drift()}}},
                {"outputs", records}};
  const std::string manifest_path = (fs::path(args.output_dir) / "manifest.json").string();
  files.add(manifest_path, manifest.dump(2) + "\n");
  files.commit();
  std::cout << manifest.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// dispersion

struct DispersionArgs {
  std::vector<double> voltages;
  std::vector<double> speeds;
  std::optional<double> vp;
  bool classical = false;
  double mass = codata2018.m_e;
  std::string output;
};

PropagationSpeed speed_from_flags(const std::optional<double>& vp, bool classical)
{
  if (vp && classical)
    throw UsageError("--vp and --classical are mutually exclusive");
  if (classical)
    return PropagationSpeed::infinite();
  if (!vp)
    throw UsageError("give --vp (m/s) or --classical");
  if (!(*vp > 0.0) || !std::isfinite(*vp))
    throw UsageError("--vp must be a positive speed in m/s");
  return PropagationSpeed::finite(*vp);
}

int cmd_dispersion(const DispersionArgs& args)
{
  const PropagationSpeed vp = speed_from_flags(args.vp, args.classical);
  if (args.voltages.empty() == args.speeds.empty())
    throw UsageError("give exactly one of --voltages or --speeds");
  if (!(args.mass > 0.0))
    throw UsageError("--mass must be positive (kg)");
  if (!args.output.empty())
    require_writable_target("--output", args.output);

  std::vector<FreeParticle> particles;
  for (double volts : args.voltages) {
    if (!(volts > 0.0) || !std::isfinite(volts))
      throw UsageError("--voltages entries must be positive (V)");
    const double v = std::sqrt(2.0 * codata2018.e_charge * volts / args.mass);
    particles.push_back(FreeParticle::from_speed(args.mass, v));
  }
  for (double v : args.speeds) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw UsageError("--speeds entries must be positive (m/s)");
    particles.push_back(FreeParticle::from_speed(args.mass, v));
  }

  const std::string table = render([&](std::ostream& os) {
    os << "voltage_V,v_m_per_s,nu_Hz,k_inv_m,k_l_inv_m,lambda_m,lambda_l_m,"
          "v_ph_m_per_s,v_ph_l_m_per_s,v_gr_m_per_s,v_gr_l_m_per_s,"
          "display_lambda_angstrom,display_lambda_l_angstrom\n";
    for (const auto& p : particles) {
      const double volts = p.mass * p.speed * p.speed / (2.0 * codata2018.e_charge);
      const double kl = modified_wavenumber_free(p, vp);
      const double values[] = {volts,
                               p.speed,
                               p.nu,
                               p.k,
                               kl,
                               1.0 / p.k,
                               1.0 / kl,
                               p.phase_velocity(),
                               modified_phase_velocity(p.phase_velocity(), vp),
                               p.group_velocity(),
                               modified_group_velocity(p.group_velocity(), vp),
                               1e10 / p.k,
                               1e10 / kl};
      for (std::size_t c = 0; c < std::size(values); ++c)
        os << (c ? "," : "") << csv::format_double(values[c]);
      os << '\n';
    }
  });

  if (args.output.empty()) {
    std::cout << table;
  } else {
    OutputSet out;
    out.add(args.output, table);
    out.commit();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// fit and compare

struct DatasetArgs {
  std::string input;
  std::string generate;
  std::string save_generated;
};

SyntheticSpec parse_generate(const std::string& text)
{
  SyntheticSpec spec;
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos)
      throw UsageError("--generate: expected key=value, got '" + token + "'");
    const std::string key = token.substr(0, eq), value = token.substr(eq + 1);
    try {
      if (key == "vP" || key == "vp") {
        spec.v_p = PropagationSpeed::finite(csv::parse_double(value, 0));
      } else if (key == "classical") {
        if (value != "1" && value != "true")
          throw UsageError("--generate: classical takes 1 or true");
        spec.v_p = PropagationSpeed::infinite();
      } else if (key == "n") {
        spec.n = csv::parse_index(value, 0);
      } else if (key == "seed") {
        spec.seed = csv::parse_index(value, 0);
      } else if (key == "noise") {
        spec.noise = csv::parse_double(value, 0);
      } else if (key == "vmin") {
        spec.v_min_volts = csv::parse_double(value, 0);
      } else if (key == "vmax") {
        spec.v_max_volts = csv::parse_double(value, 0);
      } else {
        throw UsageError("--generate: unknown key '" + key + "'");
      }
    } catch (const CsvError&) {
      throw UsageError("--generate: bad value in '" + token + "'");
    }
  }
  return spec;
}

std::vector<DiffractionRecord> load_dataset(const DatasetArgs& args, OutputSet& files)
{
  if (args.input.empty() == args.generate.empty())
    throw UsageError("give exactly one of --input or --generate");
  if (!args.input.empty()) {
    require_readable("--input", args.input);
    auto in = open_input(args.input);
    try {
      return read_diffraction_csv(in);
    } catch (const CsvError& e) {
      throw UsageError(args.input + ": " + e.what());
    }
  }
  const SyntheticSpec spec = parse_generate(args.generate);
  auto records = synthesize_records(spec);
  if (!args.save_generated.empty()) {
    require_writable_target("--save-generated", args.save_generated);
    std::vector<std::string> notes{
        "synthetic: " + args.generate,
        "wave numbers from k = (m v / h)(1 + v / 2 v_P); noise is relative to k"};
    files.add(args.save_generated,
              render([&](std::ostream& os) { write_diffraction_csv(os, records, notes); }));
  }
  return records;
}

json fit_json(const FitResult& fit)
{
  json residuals = json::array();
  for (double r : fit.residuals)
    residuals.push_back(r);
  return {{"v_p_fitted_m_per_s", finite_or_null(fit.v_p())},
          {"beta_s_per_m", fit.beta},
          {"variance_modified_inv_m2", fit.variance_modified},
          {"variance_classical_inv_m2", fit.variance_classical},
          {"variance_ratio_classical_over_modified",
           fit.variance_modified > 0.0 ? finite_or_null(fit.variance_classical /
                                                        fit.variance_modified)
                                       : json(nullptr)},
          {"n_records", fit.n_records},
          {"clamped_to_classical", fit.clamped_to_classical},
          {"residuals_inv_m", residuals}};
}

/// Three-layer table: measured points, classical curve A, modified curve B.
std::string layer_table(std::span<const DiffractionRecord> records, PropagationSpeed vp,
                        std::size_t curve_points)
{
  std::vector<Kinematics> kin;
  double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
  for (const auto& r : records) {
    kin.push_back(derive_kinematics(r));
    vmin = std::min(vmin, kin.back().v);
    vmax = std::max(vmax, kin.back().v);
  }
  const auto speeds = linspace(0.9 * vmin, 1.1 * vmax, curve_points);
  const auto curves = model_curves(speeds, vp);
  return render([&](std::ostream& os) {
    os << "layer,v_m_per_s,k_inv_m\n";
    for (const auto& k : kin)
      os << "points," << csv::format_double(k.v) << ',' << csv::format_double(k.k_exp) << '\n';
    for (const auto& c : curves)
      os << "curveA," << csv::format_double(c.v) << ',' << csv::format_double(c.k_classical)
         << '\n';
    for (const auto& c : curves)
      os << "curveB," << csv::format_double(c.v) << ',' << csv::format_double(c.k_modified)
         << '\n';
  });
}

struct FitArgs {
  DatasetArgs data;
  std::string curves;
  std::size_t curve_points = 200;
};

int cmd_fit(const FitArgs& args)
{
  if (!args.curves.empty())
    require_writable_target("--curves", args.curves);
  if (args.curve_points < 2)
    throw UsageError("--curve-points must be at least 2");
  OutputSet files;
  const auto records = load_dataset(args.data, files);
  const FitResult fit = fit_vp(records);
  if (!args.curves.empty())
    files.add(args.curves, layer_table(records, fit.speed, args.curve_points));
  files.commit();
  std::cout << fit_json(fit).dump(2) << '\n';
  return 0;
}

struct CompareArgs {
  DatasetArgs data;
  std::optional<double> vp;
  std::string output;
  std::size_t curve_points = 200;
};

int cmd_compare(const CompareArgs& args)
{
  require_writable_target("--output", args.output);
  if (args.curve_points < 2)
    throw UsageError("--curve-points must be at least 2");
  if (args.vp && (!(*args.vp > 0.0) || !std::isfinite(*args.vp)))
    throw UsageError("--vp must be a positive speed in m/s");
  OutputSet files;
  const auto records = load_dataset(args.data, files);
  const FitResult fit = fit_vp(records);
  const PropagationSpeed vp = args.vp ? PropagationSpeed::finite(*args.vp) : fit.speed;
  const double n = static_cast<double>(records.size());

  files.add(args.output, layer_table(records, vp, args.curve_points));
  files.commit();
  json summary{{"v_p_used_m_per_s", finite_or_null(vp.value())},
               {"v_p_source", args.vp ? "flag" : "fit"},
               {"variance_modified_inv_m2", sum_squared_residuals(records, vp.slowness()) / n},
               {"variance_classical_inv_m2", sum_squared_residuals(records, 0.0) / n},
               {"n_records", records.size()},
               {"output", args.output}};
  std::cout << summary.dump(2) << '\n';
  return 0;
}

void add_dataset_flags(CLI::App* sub, DatasetArgs& d)
{
  sub->add_option("--input", d.input,
                  "Diffraction CSV with header voltage_volts,wavelength_meters "
                  "(voltage in V, wavelength in m)");
  sub->add_option("--generate", d.generate,
                  "Synthetic dataset instead of --input, e.g. \"vP=1.3e8 n=20 seed=7 noise=0\". "
                  "Keys: vP [m/s], classical=1 (1/v_P = 0), n [records], seed [integer], "
                  "noise [relative std of k, e.g. 0.01 = 1%], vmin, vmax [V]");
  sub->add_option("--save-generated", d.save_generated,
                  "Also write the generated dataset to this CSV");
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Finite-speed perturbation model for Schroedinger dynamics: traveltimes, "
               "retarded propagation, dispersion tables and diffraction fits. SI units."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  EikonalArgs eik;
  auto* s_eik = app.add_subcommand("eikonal", "Solve |grad t_P| = 1 / v_P by fast marching");
  s_eik->add_option("--shape", eik.shape, "Cells per axis, 1-3 axes, e.g. 201,201")
      ->required()->delimiter(',');
  s_eik->add_option("--spacing", eik.spacing,
                    "Cell spacing [m], one value or one per axis (default 1)")
      ->delimiter(',');
  s_eik->add_option("--origin", eik.origin, "Coordinate of cell 0 per axis [m] (default 0)")
      ->delimiter(',');
  s_eik->add_option("--speed", eik.speed, "Constant propagation speed v_P [m/s]");
  s_eik->add_option("--speed-map", eik.speed_map,
                    "Per-cell v_P [m/s] as a field CSV (index_axis*,value_re)");
  s_eik->add_option("--source", eik.sources,
                    "Source cell as comma-separated indices; repeat for several "
                    "(default: centre cell)");
  s_eik->add_option("--source-radius", eik.source_radius,
                    "Radius [m] around the source given straight-ray times before marching; "
                    "0 disables (default: 4% of the shortest grid extent)");
  s_eik->add_option("--output", eik.output, "Traveltime CSV to write, t_P in s")->required();
  s_eik->add_flag("--verify-analytic", eik.verify,
                  "Report max relative error against r / v_P (constant speed, one source)");
  s_eik->add_option("--verify-exclusion", eik.verify_exclusion,
                    "Radius [m] around the source skipped by --verify-analytic "
                    "(default: 5 cells)");

  PropagateArgs prop;
  auto* s_prop = app.add_subcommand("propagate", "Crank-Nicolson propagation and retarded "
                                                 "(finite v_P) evaluation");
  s_prop->add_option("--mode", prop.mode,
                     "classical: snapshots of psi; modified: psi(x, t - t_P(x)); "
                     "compare-a8: |psi - psi_mod| and |d psi/dt t_P|")
      ->check(CLI::IsMember({"classical", "modified", "compare-a8"}));
  s_prop->add_option("--input", prop.input,
                     "Initial state CSV (index_axis*,value_re[,value_im]); boundary cells must be 0");
  s_prop->add_option("--shape", prop.shape, "Cells per axis for --packet-sigma, e.g. 512")
      ->delimiter(',');
  s_prop->add_option("--spacing", prop.spacing,
                     "Cell spacing [m], one value or one per axis")
      ->required()->delimiter(',');
  s_prop->add_option("--origin", prop.origin, "Coordinate of cell 0 per axis [m]")
      ->delimiter(',');
  s_prop->add_option("--packet-sigma", prop.packet_sigma,
                     "Gaussian initial state instead of --input: position width sigma [m]");
  s_prop->add_option("--packet-center", prop.packet_center,
                     "Gaussian centre per axis [m] (default: grid middle)")
      ->delimiter(',');
  s_prop->add_option("--packet-k", prop.packet_k,
                     "Gaussian carrier wave number 1/lambda along axis 0 [1/m] (default 0)");
  s_prop->add_option("--potential", prop.potential, "Potential energy CSV, U in J (default 0)");
  s_prop->add_option("--traveltime", prop.traveltime,
                     "Traveltime CSV, t_P in s (modified and compare-a8 modes)");
  s_prop->add_option("--mass", prop.mass, "Particle mass [kg] (default electron mass)");
  s_prop->add_option("--dt", prop.dt, "Time step [s]")->required();
  s_prop->add_option("--steps", prop.steps, "Number of time steps")->required();
  s_prop->add_option("--output-steps", prop.output_steps,
                     "Step indices to write, comma-separated; time = step * dt [s] "
                     "(default: last step)")
      ->delimiter(',');
  s_prop->add_option("--history", prop.history,
                     "Snapshots kept for retarded evaluation; 0 keeps all (default 0)");
  s_prop->add_option("--solver-tolerance", prop.solver_tolerance,
                     "Relative residual for the 2-D/3-D linear solve (dimensionless, default 1e-12)");
  s_prop->add_option("--output-dir", prop.output_dir,
                     "Existing directory for snapshot CSVs and manifest.json")
      ->required();

  DispersionArgs disp;
  auto* s_disp = app.add_subcommand("dispersion", "Free-particle dispersion table, classical "
                                                  "and modified");
  s_disp->add_option("--voltages", disp.voltages, "Accelerating voltages [V], comma-separated")
      ->delimiter(',');
  s_disp->add_option("--speeds", disp.speeds, "Particle speeds [m/s], comma-separated")
      ->delimiter(',');
  s_disp->add_option("--vp", disp.vp, "Perturbation propagation speed v_P [m/s]");
  s_disp->add_flag("--classical", disp.classical, "Use 1/v_P = 0 instead of --vp");
  s_disp->add_option("--mass", disp.mass, "Particle mass [kg] (default electron mass)");
  s_disp->add_option("--output", disp.output, "Write the table here instead of stdout");

  FitArgs fit;
  auto* s_fit = app.add_subcommand("fit", "Least-squares v_P from diffraction data");
  add_dataset_flags(s_fit, fit.data);
  s_fit->add_option("--curves", fit.curves,
                    "Also write the points / curve A / curve B table (v in m/s, k in 1/m)");
  s_fit->add_option("--curve-points", fit.curve_points, "Samples per curve (default 200)");

  CompareArgs cmp;
  auto* s_cmp = app.add_subcommand("compare", "Data points with classical and modified curves "
                                              "as one CSV");
  add_dataset_flags(s_cmp, cmp.data);
  s_cmp->add_option("--vp", cmp.vp, "v_P for curve B [m/s] (default: fitted value)");
  s_cmp->add_option("--output", cmp.output, "CSV to write: layer,v_m_per_s,k_inv_m")
      ->required();
  s_cmp->add_option("--curve-points", cmp.curve_points, "Samples per curve (default 200)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (s_eik->parsed())
      return cmd_eikonal(eik);
    if (s_prop->parsed())
      return cmd_propagate(prop);
    if (s_disp->parsed())
      return cmd_dispersion(disp);
    if (s_fit->parsed())
      return cmd_fit(fit);
    if (s_cmp->parsed())
      return cmd_compare(cmp);
  } catch (const HistoryWindowError& e) {
    std::cerr << "error: " << e.what() << "\n"
              << "hint: raise --history (0 keeps every snapshot); retarded evaluation at "
                 "step k needs about ceil(max t_P / dt) + 2 snapshots\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
