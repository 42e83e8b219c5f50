#include "rdlab/analysis.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using Catch::Approx;
using namespace rdlab;

namespace {

constexpr double pi = std::numbers::pi;
const ReactionNetwork two_by_two({1, 1, 0, 0}, {0, 0, 1, 1}, 1.0, 1.0);
const ReactionNetwork self_ionization({2, 0, 0}, {0, 1, 1}, 1.0, 1.0);

ScalarField constant(double c) {
  return [c](double) { return c; };
}

RDScenario make(const ReactionNetwork& net, std::size_t n, std::vector<ScalarField> init, double dt,
                double t_end, std::size_t every) {
  auto D = build_generator(n, 1.0);
  Field v0 = sample_initial(D, init);
  return RDScenario{net, std::move(D), std::move(v0), dt, t_end, every, true};
}

}  // namespace

TEST_CASE("fit_decay_rate: synthetic series", "[analysis]") {
  std::vector<double> t, y, z;
  for (int k = 0; k <= 400; ++k) {
    t.push_back(0.01 * k);
    y.push_back(std::exp(-2.467 * t.back()));
    z.push_back(std::exp(-t.back() * 5) * (1 + 0.01 * std::sin(t.back() * 5)));
  }
  CHECK(fit_decay_rate(t, y, 1.0, 1e-300).rate == Approx(2.467).margin(1e-9));
  // e^{-t}(1 + 0.01 sin t) on a long window, time rescaled by 5.
  const auto f = fit_decay_rate(t, z, 1.0, 1e-300);
  CHECK(f.rate / 5 == Approx(1.0).margin(0.02));
  std::vector<double> flat(t.size(), 0.3);
  CHECK_THROWS_WITH(fit_decay_rate(t, flat, 0.5, 0.0),
                    Catch::Matchers::ContainsSubstring("degenerate window"));
}

TEST_CASE("classify_regime", "[analysis]") {
  const double c = 1.0 / (2 * pi * pi);
  CHECK(classify_regime(1.0, c) == Regime::M_below_gap);
  CHECK(classify_regime(8.0, c) == Regime::M_above_gap);
  CHECK(classify_regime(pi * pi / 4, c) == Regime::M_equal_gap);
  CHECK(std::string(to_string(Regime::ode)) == "ode");
}

TEST_CASE("theorem2_envelope", "[analysis]") {
  SECTION("t = 0 dominates the initial distance") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.01, 5.0);
    for (int k = 0; k < 100; ++k) {
      const double d0 = u(rng);
      CHECK(theorem2_envelope(d0, u(rng), u(rng), u(rng) / 10, 0.0) >= d0);
    }
  }
  SECTION("homogeneous unit data on [0,1]") {
    const auto sc = make(two_by_two, 200, {constant(1), constant(1), constant(1), constant(1)}, 1e-2,
                         0.1, 1);
    const auto d = two_by_two_data(sc);
    CHECK(d.M == Approx(4.0));
    // (int 4^4 dmu)^{1/2}
    CHECK(d.M4 == Approx(16.0));
    for (double x : d.initial_distance) CHECK(x < 1e-12);
    const double g = 1.0 / (8 * d.c_sg);
    CHECK(g == Approx(pi * pi / 4).epsilon(1e-3));
    const double ratio = theorem2_envelope(d, 0, 2.0) / theorem2_envelope(d, 0, 1.0);
    CHECK(ratio == Approx(std::exp(-g)).epsilon(1e-12));
    CHECK(theorem2_envelope(d, 0, 0.0) == Approx(5 * 16.0 / (4.0 - g)));
  }
  SECTION("equal masses take the polynomial branch") {
    const double c = 0.05;
    const double g = 1.0 / (8 * c);
    for (double t : {0.0, 0.5, 3.0})
      CHECK(theorem2_envelope(0.3, g, 2.0, c, t) == Approx((0.3 + 10.0 * t) * std::exp(-g * t)));
    // Just outside the threshold the generic branch is used.
    CHECK(theorem2_envelope(0.3, g + 1e-6, 2.0, c, 0.0) > 1e6);
  }
  SECTION("rejects other networks") {
    const auto sc = make(self_ionization, 20, {constant(1), constant(1), constant(1)}, 1e-2, 0.1, 1);
    CHECK_THROWS_AS(two_by_two_data(sc), std::invalid_argument);
    const ReactionNetwork scaled({1, 1, 0, 0}, {0, 0, 1, 1}, 2.0, 1.0);
    CHECK_THROWS_WITH(require_two_by_two(scaled), Catch::Matchers::ContainsSubstring("unit rate"));
  }
}

TEST_CASE("l4_decay_check", "[analysis]") {
  const auto D = build_generator(200, 1.0);
  const std::vector<double> ts{0.01, 0.1, 1.0};
  SECTION("constant") {
    const auto rep = l4_decay_check(D, GridFunction::Constant(200, 2.0), ts);
    CHECK(rep.pass);
    for (double l : rep.lhs) CHECK(l < 1e-25);
  }
  SECTION("gap eigenfunction decays at 4 lambda_1") {
    const GridFunction e1 = D.eigenvectors().col(1);
    const GridFunction f = (1.0 + 0.5 * e1.array() / e1.cwiseAbs().maxCoeff()).matrix();
    const auto rep = l4_decay_check(D, f, ts);
    CHECK(rep.pass);
    CHECK(rep.lhs[2] / rep.lhs[1] == Approx(std::exp(-4 * D.gap() * 0.9)).epsilon(1e-8));
    CHECK(rep.min_margin > 0.0);
  }
  SECTION("random nonnegative functions") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
      GridFunction f(200);
      const double spike = u(rng) < 0.3 ? 50.0 : 1.0;
      for (Eigen::Index i = 0; i < 200; ++i) f[i] = std::pow(u(rng), 3) * (i % 37 == 0 ? spike : 1.0);
      const auto rep = l4_decay_check(D, f, ts);
      CHECK(rep.pass);
      CHECK(rep.min_margin >= 0.0);
    }
  }
  SECTION("negative input") {
    GridFunction f = GridFunction::Ones(200);
    f[3] = -1;
    CHECK_THROWS_AS(l4_decay_check(D, f, ts), std::invalid_argument);
  }
}

TEST_CASE("analyze_two_by_two: optimal regime", "[analysis]") {
  const double m = 0.25;
  const auto sc = make(two_by_two, 100,
                       {[&](double x) { return m * (1 + 0.5 * std::cos(pi * x)); }, constant(m),
                        [&](double x) { return m * (1 + 0.3 * std::cos(2 * pi * x)); }, constant(m)},
                       2e-3, 12.0, 25);
  const auto res = run(sc);
  const auto rep = analyze_two_by_two("optimal", sc, res);
  INFO("rate " << rep.rate_fit);
  CHECK(rep.regime == Regime::M_below_gap);
  CHECK(rep.rate_theory == Approx(1.0));
  CHECK(rep.passed());
  CHECK(rep.verdicts.size() == 2);
  CHECK(rep.envelope_margin > 0.0);
  CHECK(rep.fit_r2 > 0.999);
}

TEST_CASE("analyze_two_by_two: diffusion-limited regime", "[analysis]") {
  const auto sc = make(two_by_two, 100,
                       {[](double x) { return 2 * (1 + 0.5 * std::cos(pi * x)); }, constant(2),
                        constant(2), [](double x) { return 2 * (1 - 0.4 * std::cos(pi * x)); }},
                       1e-3, 3.0, 20);
  const auto res = run(sc);
  const auto rep = analyze_two_by_two("limited", sc, res);
  CHECK(rep.regime == Regime::M_above_gap);
  CHECK(rep.rate_theory == Approx(1 / (8 * sc.diffusion.C_SG())));
  // Only domination is asserted here.
  REQUIRE(rep.verdicts.size() == 1);
  CHECK(rep.verdicts[0].name == "envelope");
  CHECK(rep.passed());
}

TEST_CASE("general_decay_check", "[analysis]") {
  SECTION("perturbed self-ionization decays exponentially") {
    const auto sc = make(self_ionization, 100,
                         {[](double x) { return 2 + 0.5 * std::cos(pi * x); },
                          [](double x) { return 0.1 * (1 + std::cos(2 * pi * x)) + 1e-3; }, constant(1e-3)},
                         1e-3, 6.0, 20);
    const auto res = run(sc);
    const auto rep = general_decay_check("si", sc, res);
    INFO("rate " << rep.rate_fit << " r2 " << rep.fit_r2);
    CHECK(rep.passed());
    CHECK(rep.fit_r2 >= 0.999);
    CHECK(rep.rate_fit > 0.0);
    CHECK(std::isnan(rep.rate_theory));
    CHECK(general_decay_check(sc.network, rep).pass);
  }
  SECTION("homogeneous data recovers the kinetic rate") {
    const auto sc = make(self_ionization, 50, {constant(2), constant(1e-9), constant(1e-9)}, 1e-3,
                         6.0, 20);
    const auto res = run(sc);
    const auto rep = general_decay_check("si-hom", sc, res);
    const double C = optimal_rate(self_ionization, res.steady);
    CHECK(C == Approx(4.0).epsilon(1e-8));
    CHECK(rep.rate_fit == Approx(C).epsilon(0.03));
  }
  SECTION("species on both sides are rejected") {
    const ReactionNetwork net({1, 1, 0}, {0, 2, 1}, 1.0, 1.0);
    const auto sc = make(net, 20, {constant(1), constant(1), constant(1)}, 1e-2, 0.1, 1);
    const auto res = run(sc);
    CHECK_THROWS_WITH(general_decay_check("bad", sc, res),
                      Catch::Matchers::ContainsSubstring("alpha_i * beta_i = 0"));
  }
}

TEST_CASE("analyze_ode", "[analysis]") {
  const std::vector<double> v0{2.0, 1e-9, 1e-9};
  const auto r = reduce(self_ionization, v0);
  const auto traj = integrate(r, 8.0);
  const auto rep = analyze_ode("ode", self_ionization, r, traj);
  CHECK(rep.regime == Regime::ode);
  CHECK(rep.rate_theory == Approx(4.0).epsilon(1e-8));
  CHECK(rep.rate_fit == Approx(4.0).epsilon(0.03));
  CHECK(rep.passed());
}

TEST_CASE("report output", "[analysis]") {
  DecayReport rep;
  rep.scenario_id = "x";
  rep.rate_fit = 1.5;
  rep.fit_r2 = 0.9999;
  rep.rate_theory = 1.0;
  rep.theory = "C";
  rep.envelope_margin = 0.25;
  rep.regime = Regime::ode;
  rep.verdicts = {{"a", true, "ok"}, {"b", false, "bad"}};
  std::ostringstream text, csv;
  write_report_text(text, rep);
  CHECK_THAT(text.str(), Catch::Matchers::ContainsSubstring("regime: ode\n"));
  CHECK_THAT(text.str(), Catch::Matchers::ContainsSubstring("verdict.b: fail"));
  CHECK_THAT(text.str(), Catch::Matchers::ContainsSubstring("overall: fail\n"));
  write_report_csv_header(csv);
  write_report_csv_row(csv, rep);
  CHECK(csv.str() ==
        "scenario_id,regime,rate_theory,rate_fit,fit_r2,envelope_margin,verdict\n"
        "x,ode,1,1.5,0.99990000000000001,0.25,fail\n");
}
