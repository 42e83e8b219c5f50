#pragma once

// Well-mixed kinetics. Every species is an affine function of one pivot
// species p (v_i = c_i v_p + C_{i,p}, c_i = w_i / w_p), so the system
// collapses to the scalar ODE  dX/dt = F(X) = (X - s1) Q(X)  on (0, M).

#include "rdlab/fit.hpp"
#include "rdlab/network.hpp"
#include "rdlab/polynomial.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdlab {

struct ScalarReduction {
  std::size_t pivot = 0;
  std::vector<double> v0;
  /// c_i = w_i / w_pivot
  std::vector<double> slopes;
  /// C_{i,pivot} = v_i(0) - c_i v_pivot(0)
  std::vector<double> C_offsets;
  double pivot_weight = 0.0;
  /// F(X) = w_p (prod (c_i X + C_i)^alpha_i - prod (c_i X + C_i)^beta_i)
  Polynomial F;
  double s1 = 0.0;
  double M_bound = std::numeric_limits<double>::infinity();
  /// F(X) = (X - s1) Q(X)
  Polynomial Q;

  double species_value(std::size_t i, double X) const { return slopes[i] * X + C_offsets[i]; }

  std::vector<double> reconstruct(double X) const {
    std::vector<double> v(slopes.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = species_value(i, X);
    return v;
  }

  std::vector<double> steady() const { return reconstruct(s1); }
  double initial_pivot() const { return v0[pivot]; }
};

namespace detail {

/// F evaluated from the product form (no coefficient expansion).
inline double reduced_rate(const ReactionNetwork& net, const ScalarReduction& r, double X) {
  double fwd = 1.0, bwd = 1.0;
  for (std::size_t i = 0; i < net.species(); ++i) {
    const double v = r.species_value(i, X);
    fwd *= ipow(v, net.alpha()[i]);
    bwd *= ipow(v, net.beta()[i]);
  }
  return r.pivot_weight * (fwd - bwd);
}

}  // namespace detail

inline ScalarReduction reduce(const ReactionNetwork& net, std::span<const double> v0) {
  const std::size_t q = net.species();
  if (v0.size() != q) throw std::invalid_argument("initial state must have one entry per species");
  for (std::size_t i = 0; i < q; ++i)
    if (!(v0[i] > 0.0) || !std::isfinite(v0[i]))
      throw std::invalid_argument("initial concentration of species " + std::to_string(i + 1) +
                                  " must be positive");

  ScalarReduction r;
  r.v0.assign(v0.begin(), v0.end());

  // Pivot: among species produced by the forward reaction, the one minimising
  // v_i(0) / w_i; if none exists use the consumed side with |w_i|.
  bool have_positive = false;
  for (std::size_t i = 0; i < q; ++i) have_positive = have_positive || net.weight(i) > 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q; ++i) {
    const double w = net.weight(i);
    if ((w > 0.0) != have_positive) continue;
    const double ratio = v0[i] / std::abs(w);
    if (ratio < best) {
      best = ratio;
      r.pivot = i;
    }
  }
  r.pivot_weight = net.weight(r.pivot);

  r.slopes.resize(q);
  r.C_offsets.resize(q);
  for (std::size_t i = 0; i < q; ++i) {
    r.slopes[i] = net.weight(i) / r.pivot_weight;
    r.C_offsets[i] = v0[i] - r.slopes[i] * v0[r.pivot];
  }
  r.C_offsets[r.pivot] = 0.0;

  // Upper edge of positivity: species with negative slope vanish at -C_i / c_i.
  for (std::size_t i = 0; i < q; ++i)
    if (r.slopes[i] < 0.0) r.M_bound = std::min(r.M_bound, -r.C_offsets[i] / r.slopes[i]);

  Polynomial fwd = Polynomial::constant(1.0);
  Polynomial bwd = Polynomial::constant(1.0);
  for (std::size_t i = 0; i < q; ++i) {
    const auto lin = Polynomial::linear(r.slopes[i], r.C_offsets[i]);
    fwd = fwd * lin.pow(static_cast<unsigned>(net.alpha()[i]));
    bwd = bwd * lin.pow(static_cast<unsigned>(net.beta()[i]));
  }
  r.F = (fwd - bwd) * r.pivot_weight;

  // F > 0 left of s1 and F < 0 right of it.
  double lo = 0.0;
  double hi = r.M_bound;
  if (!std::isfinite(hi)) {
    hi = std::max(1.0, 2.0 * v0[r.pivot]);
    while (detail::reduced_rate(net, r, hi) > 0.0) hi *= 2.0;
  }
  for (int iter = 0; iter < 2000; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f = detail::reduced_rate(net, r, mid);
    if (f == 0.0) {
      lo = hi = mid;
      break;
    }
    (f > 0.0 ? lo : hi) = mid;
  }
  r.s1 = 0.5 * (lo + hi);
  r.Q = r.F.divide_by_root(r.s1).first;
  return r;
}

struct Trajectory {
  std::vector<double> t;
  std::vector<std::vector<double>> v;
  /// Euclidean distance ||v(t) - s||
  std::vector<double> dist;
  /// v_pivot(t) - s1, kept separately since it is below the resolution of v near s.
  std::vector<double> pivot_deviation;
  std::vector<double> steady;
  std::size_t pivot = 0;
};

struct IntegrateOptions {
  double tol = 1e-10;
  std::size_t samples = 1000;
};

/// Integrates the pivot deviation y = X - s1, y' = y Q(s1 + y), with an
/// embedded Dormand-Prince 4(5) pair; all species are reconstructed from
/// the affine relations, so conservation holds to round-off.
inline Trajectory integrate(const ScalarReduction& r, double t_end,
                            const IntegrateOptions& opt = {}) {
  namespace odeint = boost::numeric::odeint;
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("t_end must be positive");
  if (opt.samples < 2) throw std::invalid_argument("need at least two samples");

  Trajectory traj;
  traj.pivot = r.pivot;
  traj.steady = r.steady();
  traj.t.resize(opt.samples);
  for (std::size_t k = 0; k < opt.samples; ++k)
    traj.t[k] = t_end * static_cast<double>(k) / static_cast<double>(opt.samples - 1);

  auto record = [&](double y) {
    const double X = r.s1 + y;
    traj.v.push_back(r.reconstruct(X));
    double d2 = 0.0;
    for (std::size_t i = 0; i < traj.steady.size(); ++i) {
      const double d = r.slopes[i] * y;
      d2 += d * d;
    }
    traj.dist.push_back(std::sqrt(d2));
    traj.pivot_deviation.push_back(y);
  };

  const double y0 = r.initial_pivot() - r.s1;
  if (y0 == 0.0) {
    for (std::size_t k = 0; k < opt.samples; ++k) record(0.0);
    return traj;
  }

  using State = std::array<double, 1>;
  State y{y0};
  auto rhs = [&r](const State& s, State& dsdt, double) { dsdt[0] = s[0] * r.Q(r.s1 + s[0]); };
  auto observer = [&](const State& s, double) { record(s[0]); };
  // y never changes sign, so control is relative to |y|.
  const double abs_tol = opt.tol * 1e-12 * std::abs(y0);
  try {
    odeint::integrate_times(
        odeint::make_dense_output(abs_tol, opt.tol, odeint::runge_kutta_dopri5<State>()), rhs, y,
        traj.t.begin(), traj.t.end(), t_end / static_cast<double>(opt.samples * 10), observer,
        odeint::max_step_checker(100000));
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stiffness failure: step size control broke down (") +
                             e.what() + ")");
  }
  return traj;
}

inline Trajectory integrate(const ReactionNetwork& net, std::span<const double> v0, double t_end,
                            const IntegrateOptions& opt = {}) {
  return integrate(reduce(net, v0), t_end, opt);
}

namespace detail {

/// (Q(a) - Q(s1)) / ((a - s1) Q(a)); the difference quotient is the exact
/// synthetic-division quotient, so a = s1 needs no special handling.
struct EqSoIntegrand {
  Polynomial difference_quotient;
  const Polynomial* Q;
  double operator()(double a) const { return difference_quotient(a) / (*Q)(a); }
};

inline EqSoIntegrand eq_so_integrand(const ScalarReduction& r) {
  return {r.Q.divide_by_root(r.s1).first, &r.Q};
}

/// Same integrand in the deviation variable y = a - s1.
struct EqSoShifted {
  EqSoIntegrand f;
  double s1;
  double operator()(double y) const { return f(s1 + y); }
};

template <class Integrand>
double integrate_quotient(const Integrand& f, double from, double to) {
  if (from == to) return 0.0;
  const double lo = std::min(from, to);
  const double hi = std::max(from, to);
  double err = 0.0;
  double L1 = 0.0;
  const double val =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 20, 1e-13, &err, &L1);
  if (!std::isfinite(val) || err > 1e-9 * std::max(1.0, L1))
    throw std::runtime_error("quadrature did not converge (error estimate " + std::to_string(err) +
                             ")");
  return from < to ? val : -val;
}

}  // namespace detail

/// K = int_{v_p(0)}^{s1} (Q(a) - Q(s1)) / ((a - s1) Q(a)) da
inline double envelope_constant_K(const ScalarReduction& r) {
  const detail::EqSoShifted g{detail::eq_so_integrand(r), r.s1};
  return detail::integrate_quotient(g, r.initial_pivot() - r.s1, 0.0);
}

/// Closed form of the pivot deviation at time t given the deviation y_t = v_p(t) - s1:
/// |v_p(0) - s1| exp(Q(s1) t + int_{v_p(0)}^{v_p(t)} (Q(a)-Q(s1))/((a-s1)Q(a)) da).
inline double closed_form_deviation(const ScalarReduction& r, double deviation_at_t, double t) {
  const auto f = detail::eq_so_integrand(r);
  const double y0 = r.initial_pivot() - r.s1;
  // Integrate in the deviation variable so that v_p(t) near s1 loses no digits.
  const detail::EqSoShifted g{f, r.s1};
  return std::abs(y0) *
         std::exp(r.Q(r.s1) * t + detail::integrate_quotient(g, y0, deviation_at_t));
}

/// e^{|K|} |v_p(0) - s1| e^{-C t}
inline double ode_envelope(const ScalarReduction& r, double K, double C, double t) {
  return std::exp(std::abs(K)) * std::abs(r.initial_pivot() - r.s1) * std::exp(-C * t);
}

struct RateMeasurement {
  double rate = 0.0;
  double r2 = 0.0;
  double fit_residual = 0.0;
};

/// Log-linear fit of ||v - s|| over the last 60% of samples above 1e-12.
inline RateMeasurement measure_rate(const std::vector<double>& t,
                                    const std::vector<std::vector<double>>& v,
                                    std::span<const double> steady) {
  constexpr double floor = 1e-12;
  std::vector<double> dist(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < steady.size(); ++i) d2 += (v[k][i] - steady[i]) * (v[k][i] - steady[i]);
    dist[k] = std::sqrt(d2);
  }
  double hi = 0.0, lo = std::numeric_limits<double>::infinity();
  for (double d : dist) {
    if (!(d > floor)) break;
    hi = std::max(hi, d);
    lo = std::min(lo, d);
  }
  if (!(hi > 0.0) || hi / lo < 1e4)
    throw std::domain_error("insufficient dynamic range: distance must span 4 decades above 1e-12");
  const DecayFit fit = fit_decay_rate(t, dist, 0.6, floor);
  return {fit.rate, fit.r2, fit.rms_residual};
}

inline RateMeasurement measure_rate(const Trajectory& traj, std::span<const double> steady) {
  return measure_rate(traj.t, traj.v, steady);
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os.precision(17);
  os << "t";
  const std::size_t q = traj.steady.size();
  for (std::size_t i = 0; i < q; ++i) os << ",v_" << i + 1;
  os << ",dist_to_steady\n";
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    os << traj.t[k];
    for (std::size_t i = 0; i < q; ++i) os << ',' << traj.v[k][i];
    os << ',' << traj.dist[k] << '\n';
  }
}

}  // namespace rdlab
