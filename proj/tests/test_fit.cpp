#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "modschr/fit.hpp"

using namespace modschr;

namespace {

const auto vp13 = PropagationSpeed::finite(1.3e8);

/// Independent oracle: dense scan of beta over [0, hi].
double grid_scan_beta(const std::vector<DiffractionRecord>& recs, double hi, std::size_t n)
{
  const auto& c = codata2018;
  std::vector<double> v, kexp;
  for (const auto& r : recs) {
    v.push_back(std::sqrt(2.0 * c.e_charge * r.voltage / c.m_e));
    kexp.push_back(1.0 / r.wavelength);
  }
  double best = 0.0, best_ss = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    const double beta = hi * static_cast<double>(j) / static_cast<double>(n - 1);
    double ss = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double model = c.m_e * v[i] / c.h * (1.0 + beta * v[i] / 2.0);
      ss += (kexp[i] - model) * (kexp[i] - model);
    }
    if (ss < best_ss) {
      best_ss = ss;
      best = beta;
    }
  }
  return best;
}

}  // namespace

TEST(DeriveKinematics, Examples)
{
  const auto k = derive_kinematics({54.0, 1.67e-10});
  EXPECT_NEAR(k.v, 4.3584e6, 0.00005e6);
  EXPECT_NEAR(k.k_exp, 5.988e9, 0.0005e9);
  EXPECT_NEAR(derive_kinematics({216.0, 1e-10}).v, 2.0 * k.v, 1e-9 * k.v);
  EXPECT_THROW(derive_kinematics({0.0, 1e-10}), std::invalid_argument);
  EXPECT_THROW(derive_kinematics({10.0, -1e-10}), std::invalid_argument);
}

TEST(FitVp, NoiselessRecovery)
{
  const auto recs = synthesize_records({.v_p = vp13, .n = 20, .seed = 7, .noise = 0.0});
  const auto fit = fit_vp(recs);
  EXPECT_NEAR(fit.v_p(), 1.3e8, 1e-6 * 1.3e8);
  EXPECT_FALSE(fit.clamped_to_classical);
  EXPECT_EQ(fit.n_records, 20u);
  EXPECT_EQ(fit.residuals.size(), 20u);
  EXPECT_LT(fit.variance_modified, 1e-12 * fit.variance_classical);
}

TEST(FitVp, ClassicalDataClampsToInfiniteSpeed)
{
  const auto recs = synthesize_records({.v_p = PropagationSpeed::infinite(), .n = 15});
  const auto fit = fit_vp(recs);
  EXPECT_EQ(fit.beta, 0.0);
  EXPECT_TRUE(fit.speed.is_infinite());
  EXPECT_NEAR(fit.variance_modified, 0.0, 1.0);
  EXPECT_EQ(fit.variance_modified, fit.variance_classical);
}

TEST(FitVp, NegativeOptimumIsClampedAndFlagged)
{
  // wavelengths longer than classical -> unconstrained beta < 0
  std::vector<DiffractionRecord> recs;
  for (double volts : {50.0, 100.0, 200.0, 400.0}) {
    const auto k = derive_kinematics({volts, 1.0});
    const double kcls = codata2018.m_e * k.v / codata2018.h;
    recs.push_back({volts, 1.0 / (0.97 * kcls)});
  }
  const auto fit = fit_vp(recs);
  EXPECT_TRUE(fit.clamped_to_classical);
  EXPECT_TRUE(fit.speed.is_infinite());
  EXPECT_EQ(fit.variance_modified, fit.variance_classical);
}

TEST(FitVp, ErrorPaths)
{
  std::vector<DiffractionRecord> one{{54.0, 1.67e-10}};
  EXPECT_THROW(fit_vp(one), std::invalid_argument);
}

TEST(FitVp, ClosedFormMatchesGridScanOracle)
{
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto recs = synthesize_records({.v_p = vp13, .n = 25, .seed = seed, .noise = 0.02});
    const auto fit = fit_vp(recs);
    ASSERT_GT(fit.beta, 0.0);
    const std::size_t n = 1000001;
    const double hi = 1.7 * fit.beta;
    const double scan = grid_scan_beta(recs, hi, n);
    EXPECT_NEAR(scan, fit.beta, hi / static_cast<double>(n - 1));
  }
}

TEST(FitVp, OptimalityAndNesting)
{
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto recs = synthesize_records({.v_p = vp13, .n = 12, .seed = seed, .noise = 0.03});
    const auto fit = fit_vp(recs);
    EXPECT_LE(fit.variance_modified, fit.variance_classical);
    const double ss = sum_squared_residuals(recs, fit.beta);
    if (fit.beta > 0.0) {
      EXPECT_GE(sum_squared_residuals(recs, 1.01 * fit.beta), ss);
      EXPECT_GE(sum_squared_residuals(recs, 0.99 * fit.beta), ss);
    }
    EXPECT_NEAR(ss / 12.0, fit.variance_modified, 1e-9 * fit.variance_modified);
  }
}

TEST(FitVp, DeterministicAcrossCsvRoundTrip)
{
  const auto recs = synthesize_records({.v_p = vp13, .n = 30, .seed = 99, .noise = 0.01});
  std::stringstream io;
  write_diffraction_csv(io, recs, {"synthetic"});
  const auto back = read_diffraction_csv(io);
  const auto a = fit_vp(recs), b = fit_vp(back);
  EXPECT_EQ(a.beta, b.beta);
  EXPECT_EQ(a.variance_modified, b.variance_modified);
  EXPECT_EQ(a.residuals, b.residuals);
}

TEST(FitVp, WavelengthUnitsMustBeMetres)
{
  // Same physics written with a scaled wavelength column is different data;
  // the fit result follows the declared metres without autodetection.
  const auto recs = synthesize_records({.v_p = vp13, .n = 10});
  auto scaled = recs;
  for (auto& r : scaled)
    r.wavelength *= 1.05;
  EXPECT_NE(fit_vp(recs).beta, fit_vp(scaled).beta);
}

TEST(SyntheticRecords, SeededNoiseIsReproducible)
{
  const SyntheticSpec spec{.v_p = vp13, .n = 8, .seed = 5, .noise = 0.01};
  const auto a = synthesize_records(spec), b = synthesize_records(spec);
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_EQ(a[i].wavelength, b[i].wavelength);
  auto other = spec;
  other.seed = 6;
  EXPECT_NE(synthesize_records(other)[0].wavelength, a[0].wavelength);
  EXPECT_DOUBLE_EQ(a.front().voltage, 30.0);
  EXPECT_DOUBLE_EQ(a.back().voltage, 600.0);
  EXPECT_THROW(synthesize_records({.n = 1}), std::invalid_argument);
}

TEST(NormalSource, MomentsLookStandard)
{
  NormalSource z(123);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = z();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(ModelCurves, ShapeAndOrdering)
{
  const auto speeds = linspace(0.0, 1.5e7, 50);
  const auto curves = model_curves(speeds, vp13);
  EXPECT_EQ(curves.front().k_classical, 0.0);
  EXPECT_EQ(curves.front().k_modified, 0.0);
  for (std::size_t i = 1; i < curves.size(); ++i) {
    EXPECT_GT(curves[i].k_modified, curves[i].k_classical);
    EXPECT_GT(curves[i].k_classical, curves[i - 1].k_classical);
    EXPECT_GT(curves[i].k_modified, curves[i - 1].k_modified);
  }
  EXPECT_THROW(model_curves(std::vector<double>{}, vp13), std::invalid_argument);
  EXPECT_THROW(model_curves(std::vector<double>{-1.0}, vp13), std::invalid_argument);
}

TEST(DiffractionCsv, CommentsBlankLinesAndErrors)
{
  std::istringstream ok("# digitized\nvoltage_volts,wavelength_meters\n\n54,1.67e-10\n# mid\n100,1.2e-10\n");
  const auto recs = read_diffraction_csv(ok);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1].voltage, 100.0);

  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_diffraction_csv(in);
    } catch (const CsvError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("voltage_volts,wavelength_meters\n54,1e-10\n55\n"), 3u);
  EXPECT_EQ(line_of("voltage_volts,wavelength_meters\n54,abc\n"), 2u);
  EXPECT_EQ(line_of("volts,lambda\n54,1e-10\n"), 1u);
  EXPECT_EQ(line_of("voltage_volts,wavelength_meters\n-4,1e-10\n"), 2u);
  EXPECT_EQ(line_of("# only comments\n"), 2u);
}

TEST(DiffractionCsv, ShippedDatasetParses)
{
  std::ifstream in(MODSCHR_DATA_DIR "/davisson_germer_reconstructed.csv");
  ASSERT_TRUE(in.good());
  const auto recs = read_diffraction_csv(in);
  EXPECT_GE(recs.size(), 10u);
}
