#pragma once

// Verdicts on completed runs: fitted rates, theoretical envelopes and the
// fourth-moment decay inequality of the semigroup.

#include "rdlab/diffusion.hpp"
#include "rdlab/fit.hpp"
#include "rdlab/kinetics_ode.hpp"
#include "rdlab/network.hpp"
#include "rdlab/rd_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rdlab {

enum class Regime { M_below_gap, M_above_gap, M_equal_gap, ode, general };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::M_below_gap: return "M_below_gap";
    case Regime::M_above_gap: return "M_above_gap";
    case Regime::M_equal_gap: return "M_equal_gap";
    case Regime::ode: return "ode";
    case Regime::general: return "general";
  }
  return "unknown";
}

inline constexpr double kEqualGapThreshold = 1e-9;

/// Compares the total mass M with the diffusion threshold 1/(8 C_SG).
inline Regime classify_regime(double M, double c_sg) {
  const double g = 1.0 / (8.0 * c_sg);
  if (std::abs(M - g) < kEqualGapThreshold) return Regime::M_equal_gap;
  return M < g ? Regime::M_below_gap : Regime::M_above_gap;
}

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct DecayReport {
  std::string scenario_id;
  double rate_fit = std::numeric_limits<double>::quiet_NaN();
  double fit_r2 = std::numeric_limits<double>::quiet_NaN();
  /// NaN when the theory is qualitative only.
  double rate_theory = std::numeric_limits<double>::quiet_NaN();
  std::string theory;
  double envelope_margin = std::numeric_limits<double>::quiet_NaN();
  Regime regime = Regime::general;
  std::vector<Verdict> verdicts;

  bool passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
  }
};

// ---------------------------------------------------------------------------
// A + B <=> C + D with unit rates.

struct TwoByTwoData {
  double M = 0.0;   ///< int (a0 + b0 + c0 + d0) dmu
  double M4 = 0.0;  ///< (int (a0 + b0 + c0 + d0)^4 dmu)^{1/2}
  double c_sg = 0.0;
  /// sqrt(int (v_i^0 - s_i)^2 dmu) per species.
  std::vector<double> initial_distance;
};

inline void require_two_by_two(const ReactionNetwork& net) {
  if (!net.is_two_by_two())
    throw std::invalid_argument("the two-by-two envelope applies only to A + B <=> C + D; got " +
                                net.describe());
  for (double k : net.k_norm())
    if (std::abs(k - 1.0) > 1e-12)
      throw std::invalid_argument("the two-by-two envelope needs unit rate constants");
}

inline TwoByTwoData two_by_two_data(const RDScenario& sc) {
  require_two_by_two(sc.network);
  const auto& D = sc.diffusion;
  TwoByTwoData d;
  const Eigen::VectorXd total = sc.v0.colwise().sum().transpose();
  d.M = D.mean(total);
  d.M4 = std::sqrt(D.moment4(total));
  d.c_sg = D.C_SG();
  const Eigen::VectorXd m = species_means(D, sc.v0);
  const auto s = steady_state(sc.network, std::vector<double>(m.data(), m.data() + m.size())).s;
  for (Eigen::Index i = 0; i < 4; ++i)
    d.initial_distance.push_back(
        D.norm((sc.v0.row(i).transpose().array() - s[static_cast<std::size_t>(i)]).matrix()));
  return d;
}

/// (d0 + |5 M4 / (M - 1/(8C_SG))|) exp(-min{M, 1/(8C_SG)} t), or
/// (d0 + 5 M4 t) exp(-M t) when M and 1/(8C_SG) coincide.
inline double theorem2_envelope(double d0, double M, double M4, double c_sg, double t) {
  const double g = 1.0 / (8.0 * c_sg);
  if (std::abs(M - g) < kEqualGapThreshold) return (d0 + 5.0 * M4 * t) * std::exp(-M * t);
  return (d0 + std::abs(5.0 * M4 / (M - g))) * std::exp(-std::min(M, g) * t);
}

inline double theorem2_envelope(const TwoByTwoData& d, std::size_t species, double t) {
  return theorem2_envelope(d.initial_distance.at(species), d.M, d.M4, d.c_sg, t);
}

// ---------------------------------------------------------------------------
// Fourth moment: int (P_t f - int f dmu)^4 dmu <= 4 e^{-t/(2 C_SG)} int f^4 dmu.

struct L4Check {
  std::vector<double> t;
  std::vector<double> lhs;
  std::vector<double> rhs;
  double min_margin = std::numeric_limits<double>::infinity();  ///< min of rhs - lhs
  bool pass = true;
};

inline L4Check l4_decay_check(const DiscreteDiffusion& D, const GridFunction& f,
                              std::span<const double> t_samples) {
  if (f.minCoeff() < 0.0) throw std::invalid_argument("fourth-moment check expects f >= 0");
  L4Check out;
  const double m = D.mean(f);
  const double f4 = D.moment4(f);
  for (double t : t_samples) {
    const GridFunction centred = (D.semigroup_apply(f, t).array() - m).matrix();
    const double lhs = D.moment4(centred);
    const double rhs = 4.0 * std::exp(-t / (2.0 * D.C_SG())) * f4;
    out.t.push_back(t);
    out.lhs.push_back(lhs);
    out.rhs.push_back(rhs);
    out.min_margin = std::min(out.min_margin, rhs - lhs);
    out.pass = out.pass && lhs <= rhs * (1.0 + 1e-10);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report builders.

struct FitSettings {
  double window_fraction = 0.5;
  double floor = 1e-11;
};

namespace detail {

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

inline std::vector<double> sample_times(const RunResult& res) {
  std::vector<double> t;
  for (const auto& r : res.samples) t.push_back(r.t);
  return t;
}

inline std::vector<double> species_distance(const RunResult& res, std::size_t i) {
  std::vector<double> d;
  for (const auto& r : res.samples) d.push_back(r.distance.at(i));
  return d;
}

inline std::vector<double> total_distance(const RunResult& res) {
  std::vector<double> d;
  for (const auto& r : res.samples) {
    double acc = 0.0;
    for (double x : r.distance) acc += x * x;
    d.push_back(std::sqrt(acc));
  }
  return d;
}

inline void record_fit(DecayReport& rep, std::span<const double> t, std::span<const double> y,
                       const FitSettings& fs) {
  try {
    const DecayFit fit = fit_decay_rate(t, y, fs.window_fraction, fs.floor);
    rep.rate_fit = fit.rate;
    rep.fit_r2 = fit.r2;
  } catch (const std::domain_error& e) {
    rep.verdicts.push_back({"rate_fit", false, e.what()});
  }
}

}  // namespace detail

/// Envelope domination for every species, and rate optimality when M < 1/(8 C_SG).
inline DecayReport analyze_two_by_two(std::string id, const RDScenario& sc, const RunResult& res,
                                      double rate_tolerance = 0.10, const FitSettings& fs = {}) {
  const TwoByTwoData d = two_by_two_data(sc);
  DecayReport rep;
  rep.scenario_id = std::move(id);
  rep.regime = classify_regime(d.M, d.c_sg);
  rep.rate_theory = std::min(d.M, 1.0 / (8.0 * d.c_sg));
  rep.theory = "min{M, 1/(8 C_SG)}";

  const auto t = detail::sample_times(res);
  const auto dist_a = detail::species_distance(res, 0);
  detail::record_fit(rep, t, dist_a, fs);

  double margin = std::numeric_limits<double>::infinity();
  bool dominated = true;
  for (std::size_t i = 0; i < 4; ++i)
    for (const auto& r : res.samples) {
      const double env = theorem2_envelope(d, i, r.t);
      margin = std::min(margin, env - r.distance[i]);
      dominated = dominated && r.distance[i] <= env * (1.0 + 1e-6);
    }
  rep.envelope_margin = margin;
  rep.verdicts.push_back({"envelope", dominated, "min(envelope - distance) = " + detail::fmt(margin)});

  if (rep.regime == Regime::M_below_gap && std::isfinite(rep.rate_fit)) {
    const double rel = std::abs(rep.rate_fit - d.M) / d.M;
    rep.verdicts.push_back({"optimal_rate", rel <= rate_tolerance,
                            "fit " + detail::fmt(rep.rate_fit) + " vs M " + detail::fmt(d.M) +
                                " (rel " + detail::fmt(rel) + ")"});
  }
  return rep;
}

/// Throws std::invalid_argument unless alpha_i beta_i = 0 for every species.
inline void require_disjoint_sides(const ReactionNetwork& net) {
  for (std::size_t i = 0; i < net.species(); ++i)
    if (net.alpha()[i] * net.beta()[i] != 0)
      throw std::invalid_argument("general decay needs alpha_i * beta_i = 0 for every species; species " +
                                  std::to_string(i + 1) + " appears on both sides of " +
                                  net.describe());
}

/// Qualitative exponential decay of the total L2(mu) distance: tail r2 >= min_r2 and rate > 0.
inline DecayReport general_decay_check(std::string id, const RDScenario& sc, const RunResult& res,
                                       double min_r2 = 0.999, const FitSettings& fs = {}) {
  require_disjoint_sides(sc.network);
  DecayReport rep;
  rep.scenario_id = std::move(id);
  rep.regime = Regime::general;
  rep.theory = "qualitative";
  const auto t = detail::sample_times(res);
  const auto dist = detail::total_distance(res);
  detail::record_fit(rep, t, dist, fs);
  if (std::isfinite(rep.rate_fit)) {
    rep.verdicts.push_back({"tail_r2", rep.fit_r2 >= min_r2, "r2 = " + detail::fmt(rep.fit_r2)});
    rep.verdicts.push_back({"positive_rate", rep.rate_fit > 0.0, "rate = " + detail::fmt(rep.rate_fit)});
  }
  return rep;
}

/// Verdict on an already-fitted report.
inline Verdict general_decay_check(const ReactionNetwork& net, const DecayReport& rep,
                                   double min_r2 = 0.999) {
  require_disjoint_sides(net);
  const bool ok = std::isfinite(rep.rate_fit) && rep.rate_fit > 0.0 && rep.fit_r2 >= min_r2;
  return {"general_decay", ok,
          "rate " + detail::fmt(rep.rate_fit) + ", r2 " + detail::fmt(rep.fit_r2) +
              " (qualitative: constants are not explicit)"};
}

/// Optimal rate C for the scalar kinetics and the closed-form envelope.
inline DecayReport analyze_ode(std::string id, const ReactionNetwork& net, const ScalarReduction& r,
                               const Trajectory& traj, double rate_tolerance = 0.03) {
  DecayReport rep;
  rep.scenario_id = std::move(id);
  rep.regime = Regime::ode;
  rep.theory = "C";
  const auto s = r.steady();
  const double C = optimal_rate(net, s);
  rep.rate_theory = C;
  try {
    const auto m = measure_rate(traj, s);
    rep.rate_fit = m.rate;
    rep.fit_r2 = m.r2;
    const double rel = std::abs(m.rate - C) / C;
    rep.verdicts.push_back({"optimal_rate", rel <= rate_tolerance,
                            "fit " + detail::fmt(m.rate) + " vs C " + detail::fmt(C) + " (rel " +
                                detail::fmt(rel) + ")"});
  } catch (const std::domain_error& e) {
    rep.verdicts.push_back({"optimal_rate", false, e.what()});
  }
  const double K = envelope_constant_K(r);
  double margin = std::numeric_limits<double>::infinity();
  bool dominated = true;
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    const double env = ode_envelope(r, K, C, traj.t[k]);
    const double dev = std::abs(traj.pivot_deviation[k]);
    margin = std::min(margin, env - dev);
    dominated = dominated && dev <= env * (1.0 + 1e-8);
  }
  rep.envelope_margin = margin;
  rep.verdicts.push_back({"envelope", dominated, "min(envelope - |v_p - s_p|) = " + detail::fmt(margin)});
  return rep;
}

// ---------------------------------------------------------------------------

inline void write_report_text(std::ostream& os, const DecayReport& rep) {
  os.precision(10);
  os << "scenario_id: " << rep.scenario_id << '\n'
     << "regime: " << to_string(rep.regime) << '\n'
     << "rate_theory: ";
  if (std::isfinite(rep.rate_theory))
    os << rep.rate_theory << " (" << rep.theory << ")\n";
  else
    os << rep.theory << '\n';
  os << "rate_fit: " << rep.rate_fit << '\n'
     << "fit_r2: " << rep.fit_r2 << '\n'
     << "envelope_margin: " << rep.envelope_margin << '\n';
  for (const auto& v : rep.verdicts)
    os << "verdict." << v.name << ": " << (v.pass ? "pass" : "fail") << " -- " << v.detail << '\n';
  os << "overall: " << (rep.passed() ? "pass" : "fail") << '\n';
}

inline void write_report_csv_header(std::ostream& os) {
  os << "scenario_id,regime,rate_theory,rate_fit,fit_r2,envelope_margin,verdict\n";
}

inline void write_report_csv_row(std::ostream& os, const DecayReport& rep) {
  os.precision(17);
  os << rep.scenario_id << ',' << to_string(rep.regime) << ',' << rep.rate_theory << ','
     << rep.rate_fit << ',' << rep.fit_r2 << ',' << rep.envelope_margin << ','
     << (rep.passed() ? "pass" : "fail") << '\n';
}

}  // namespace rdlab
