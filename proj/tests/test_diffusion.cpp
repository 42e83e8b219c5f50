#include "rdlab/diffusion.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using Catch::Approx;
using namespace rdlab;

namespace {

constexpr double pi = std::numbers::pi;

double zero(double) { return 0.0; }
double one(double) { return 1.0; }

GridFunction random_field(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  GridFunction f(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

// Sturm-sequence count of eigenvalues of the symmetric tridiagonal (d, e)
// below x; bisection on it gives eigenvalue k independently of Eigen.
int sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
  int count = 0;
  double q = d[0] - x;
  if (q < 0) ++count;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (q == 0.0) q = 1e-300;
    q = d[i] - x - e[i - 1] * e[i - 1] / q;
    if (q < 0) ++count;
  }
  return count;
}

double sturm_eigenvalue(const Eigen::MatrixXd& minus_L, const Eigen::VectorXd& mu, int k) {
  const auto n = minus_L.rows();
  std::vector<double> d(n), e(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = minus_L(i, i);
  for (Eigen::Index i = 0; i + 1 < n; ++i)
    e[i] = minus_L(i, i + 1) * std::sqrt(mu[i] / mu[i + 1]);
  double lo = 0.0, hi = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) hi = std::max(hi, std::abs(d[i]) * 3.0);
  lo = -1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sturm_count(d, e, mid) > k ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("generator structure", "[diffusion]") {
  const auto D = build_generator(120, 1.3, [](double x) { return std::sin(3 * x) + x * x; },
                                 [](double x) { return 1.0 + 0.5 * x; });
  const auto& L = D.generator();
  const GridFunction ones = GridFunction::Ones(120);
  CHECK((L * ones).cwiseAbs().maxCoeff() <= 1e-13 * L.cwiseAbs().maxCoeff());
  CHECK(D.mu().sum() == Approx(1.0).epsilon(1e-15));
  CHECK(D.mu().minCoeff() > 0.0);

  for (Eigen::Index i = 0; i < L.rows(); ++i)
    for (Eigen::Index j = 0; j < L.cols(); ++j)
      if (i != j) CHECK(L(i, j) >= 0.0);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_field(rng, 120);
    const auto g = random_field(rng, 120);
    const double scale = L.cwiseAbs().maxCoeff();
    CHECK(std::abs(D.mean(L * f)) <= 1e-13 * scale);
    CHECK(std::abs(D.inner(f, L * g) - D.inner(L * f, g)) <= 1e-12 * scale);
    CHECK(-D.inner(f, L * f) >= -1e-13 * scale);
  }
  CHECK(std::abs(D.eigenvalues()[0]) <= 1e-10);
  CHECK(D.eigenvalues()[1] > 0.0);

  // mu-orthonormality of the eigenbasis.
  const Eigen::MatrixXd gram = D.eigenvectors().transpose() * D.mu().asDiagonal() * D.eigenvectors();
  CHECK((gram - Eigen::MatrixXd::Identity(120, 120)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("build_generator rejects bad input", "[diffusion]") {
  CHECK_THROWS_AS(build_generator(2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_generator(10, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_generator(10, 1.0, zero, [](double x) { return x - 0.5; }),
                  std::invalid_argument);
}

TEST_CASE("Neumann Laplacian spectrum", "[diffusion]") {
  SECTION("uniform measure") {
    const auto D = build_generator(64, 1.0);
    for (Eigen::Index i = 0; i < 64; ++i) CHECK(D.mu()[i] == Approx(1.0 / 64).epsilon(1e-14));
  }
  SECTION("matches the discrete closed form and the continuum value") {
    const auto D = build_generator(200, 1.0);
    const double h = 1.0 / 200;
    for (int k = 1; k < 6; ++k) {
      const double exact = 4.0 / (h * h) * std::pow(std::sin(k * pi * h / 2.0), 2);
      CHECK(D.eigenvalues()[k] == Approx(exact).epsilon(1e-10));
    }
    CHECK(std::abs(D.gap() / (pi * pi) - 1.0) < 1e-3);
    CHECK(std::abs(spectral_gap(D) * 2.0 * pi * pi - 1.0) < 1e-3);
  }
}

TEST_CASE("spectral gap refinement", "[diffusion]") {
  SECTION("unit interval extrapolates to 1/(2 pi^2)") {
    const auto study = refine_spectral_gap({50, 100, 200, 400}, 1.0, zero, one);
    REQUIRE(study.rows.size() == 4);
    for (double p : study.observed_order) CHECK(p == Approx(2.0).margin(0.05));
    CHECK(study.c_sg_extrapolated == Approx(1.0 / (2 * pi * pi)).epsilon(1e-6));
  }
  SECTION("length 2 quadruples C_SG") {
    const auto study = refine_spectral_gap({50, 100, 200, 400}, 2.0, zero, one);
    CHECK(study.c_sg_extrapolated == Approx(4.0 / (2 * pi * pi)).epsilon(1e-6));
  }
  SECTION("constant diffusivity 4 divides C_SG by 4") {
    const auto a1 = build_generator(100, 1.0);
    const auto a4 = build_generator(100, 1.0, zero, [](double) { return 4.0; });
    CHECK(a4.C_SG() == Approx(a1.C_SG() / 4.0).epsilon(1e-12));
  }
  SECTION("smooth potential converges at second order") {
    auto psi = [](double x) { return 2.0 * std::cos(pi * x) + x; };
    const auto study = refine_spectral_gap({40, 80, 160, 320}, 1.0, psi, one);
    for (double p : study.observed_order) CHECK(p == Approx(2.0).margin(0.1));
  }
}

TEST_CASE("eigenvalues agree with a Sturm-sequence oracle", "[diffusion]") {
  auto psi = [](double x) { return 4.0 * x; };
  const auto D = build_generator(400, 1.0, psi, one);
  for (Eigen::Index i = 0; i < 400; ++i) {
    const double rho = std::exp(-4.0 * D.x()[i]);
    const double ref = rho / D.mu()[i];
    CHECK(ref == Approx(std::exp(-4.0 * D.x()[0]) / D.mu()[0]).epsilon(1e-12));
  }
  const Eigen::MatrixXd minus_L = -D.generator();
  for (int k = 1; k <= 3; ++k) {
    const double lam = sturm_eigenvalue(minus_L, D.mu(), k);
    CHECK(D.eigenvalues()[k] == Approx(lam).epsilon(1e-9));
  }
}

TEST_CASE("semigroup_apply", "[diffusion]") {
  const auto D = build_generator(100, 1.0, [](double x) { return std::sin(2 * pi * x); }, one);
  std::mt19937_64 rng(4);
  const auto f = random_field(rng, 100);

  SECTION("identity at t = 0 and invariance of constants") {
    CHECK(D.semigroup_apply(f, 0.0) == f);
    const GridFunction c = GridFunction::Constant(100, 3.25);
    for (double t : {0.01, 1.0, 50.0})
      CHECK((D.semigroup_apply(c, t).array() - 3.25).abs().maxCoeff() <= 1e-12);
    CHECK_THROWS_AS(D.semigroup_apply(f, -0.1), std::invalid_argument);
  }
  SECTION("mass preserved") {
    for (double t : {0.001, 0.1, 10.0})
      CHECK(D.mean(D.semigroup_apply(f, t)) == Approx(D.mean(f)).margin(1e-14));
  }
  SECTION("variance decays within the spectral-gap envelope") {
    for (int trial = 0; trial < 50; ++trial) {
      const auto g = random_field(rng, 100, 0.0, 5.0);
      std::uniform_real_distribution<double> ut(0.0, 0.5);
      const double t = ut(rng);
      const double lhs = D.variance(D.semigroup_apply(g, t));
      const double rhs = std::exp(-t / D.C_SG()) * D.variance(g);
      CHECK(lhs <= rhs * (1 + 1e-12) + 1e-15);
    }
    const GridFunction e1 = D.eigenvectors().col(1);
    for (double t : {0.01, 0.05, 0.2}) {
      const double lhs = D.variance(D.semigroup_apply(e1, t));
      CHECK(lhs == Approx(std::exp(-t / D.C_SG()) * D.variance(e1)).epsilon(1e-10));
    }
  }
  SECTION("semigroup property") {
    for (auto [s, t] : {std::pair{0.01, 0.02}, std::pair{0.1, 0.3}, std::pair{1.0, 2.0}}) {
      const auto lhs = D.semigroup_apply(D.semigroup_apply(f, s), t);
      const auto rhs = D.semigroup_apply(f, s + t);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SECTION("propagator is Markov") {
    for (double t : {1e-4, 1e-2, 1.0}) {
      const auto P = D.propagator(t);
      CHECK(P.minCoeff() >= -1e-13);  // nonnegative up to round-off
      CHECK((P.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
      CHECK((P * f - D.semigroup_apply(f, t)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SECTION("L4 norm is nonincreasing") {
    const auto g = random_field(rng, 100, 0.0, 2.0);
    const double h = 1e-4;
    for (double t : {0.001, 0.01, 0.1, 1.0}) {
      const double up = D.moment4(D.semigroup_apply(g, t + h));
      const double down = D.moment4(D.semigroup_apply(g, t - h < 0 ? 0 : t - h));
      CHECK((up - down) <= 1e-13);
    }
  }
}

TEST_CASE("fourth-moment decay of the semigroup", "[diffusion][property]") {
  const auto D = build_generator(200, 1.0);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = random_field(rng, 200, 0.0, 3.0);
    const double m = D.mean(f);
    for (double t : {0.01, 0.1, 1.0, 10.0}) {
      const GridFunction centred = D.semigroup_apply(f, t).array() - m;
      const double lhs = D.moment4(centred);
      const double rhs = 4.0 * std::exp(-t / (2.0 * D.C_SG())) * D.moment4(f);
      CHECK(lhs <= rhs);
    }
  }
}

TEST_CASE("variance and moment4", "[diffusion]") {
  const auto D = build_generator(10, 1.0);
  CHECK(D.variance(GridFunction::Constant(10, 2.0)) == Approx(0.0).margin(1e-15));
  GridFunction step(10);
  for (int i = 0; i < 10; ++i) step[i] = i < 5 ? -1.0 : 1.0;
  CHECK(D.variance(step) == Approx(1.0));
  CHECK(D.moment4(step) == Approx(1.0));

  std::mt19937_64 rng(12);
  const auto D2 = build_generator(50, 1.0, [](double x) { return x * x; }, one);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_field(rng, 50, -2.0, 3.0);
    const GridFunction centred = f.array() - D2.mean(f);
    CHECK(D2.variance(f) == Approx(D2.inner(centred, centred)).epsilon(1e-13));
  }
}

TEST_CASE("csv output", "[diffusion]") {
  const auto D = build_generator(3, 1.0);
  std::ostringstream os;
  write_grid_function_csv(os, D, GridFunction::Constant(3, 1.5));
  const std::string text = os.str();
  CHECK(text.rfind("x,value\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}
