#pragma once

// Reaction-diffusion on the discrete interval:
//   d/dt v_i = L v_i + w_i * G(v),   zero-flux ends,
// advanced by Strang splitting (exact diffusion half-steps around an RK4
// reaction step on the positive-part reaction term).

#include "rdlab/diffusion.hpp"
#include "rdlab/network.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rdlab {

/// Rows are species, columns are cells.
using Field = Eigen::MatrixXd;

struct RDScenario {
  ReactionNetwork network;
  DiscreteDiffusion diffusion;
  Field v0;
  double dt = 1e-3;
  double t_end = 1.0;
  std::size_t sample_every = 1;
  /// false switches the reaction off (pure diffusion of every species).
  bool reaction = true;
};

struct FieldState {
  double t = 0.0;
  Field v;
  double clamp_l1 = 0.0;
};

inline constexpr double kBlowUpThreshold = 1e6;

inline Eigen::VectorXd species_means(const DiscreteDiffusion& D, const Field& v) {
  return v * D.mu();
}

/// Samples one closed-form field per species at the cell centres.
inline Field sample_initial(const DiscreteDiffusion& D, const std::vector<ScalarField>& fns) {
  Field v(static_cast<Eigen::Index>(fns.size()), static_cast<Eigen::Index>(D.size()));
  for (std::size_t i = 0; i < fns.size(); ++i)
    v.row(static_cast<Eigen::Index>(i)) = D.sample(fns[i]).transpose();
  return v;
}

inline void validate_scenario(const RDScenario& sc) {
  const auto q = static_cast<Eigen::Index>(sc.network.species());
  const auto n = static_cast<Eigen::Index>(sc.diffusion.size());
  if (sc.v0.rows() != q || sc.v0.cols() != n)
    throw std::invalid_argument("initial data must be " + std::to_string(q) + " x " +
                                std::to_string(n));
  if (!(sc.dt > 0.0) || !std::isfinite(sc.dt)) throw std::invalid_argument("dt must be positive");
  if (!(sc.t_end >= 0.0) || !std::isfinite(sc.t_end))
    throw std::invalid_argument("t_end must be nonnegative");
  if (sc.sample_every == 0) throw std::invalid_argument("sample_every must be at least 1");
  if (!sc.v0.allFinite()) throw std::invalid_argument("initial data is not finite");
  if (sc.v0.minCoeff() < 0.0) throw std::invalid_argument("initial data must be nonnegative");
  const Eigen::VectorXd m = species_means(sc.diffusion, sc.v0);
  for (Eigen::Index i = 0; i < q; ++i)
    if (!(m[i] > 0.0))
      throw std::invalid_argument("initial mean of species " + std::to_string(i + 1) +
                                  " must be positive");
}

/// Single-step integrator; caches the half-step propagator for the scenario dt.
class StrangStepper {
 public:
  explicit StrangStepper(const RDScenario& sc) : sc_(&sc), weights_(sc.network.weights()) {
    half_ = sc.diffusion.propagator(0.5 * sc.dt).transpose();
  }

  FieldState step(const FieldState& s) const { return step(s, sc_->dt); }

  FieldState step(const FieldState& s, double h) const {
    FieldState out = s;
    if (h == sc_->dt) {
      diffuse(out.v, half_);
      react(out, h);
      diffuse(out.v, half_);
    } else {
      const Eigen::MatrixXd p = sc_->diffusion.propagator(0.5 * h).transpose();
      diffuse(out.v, p);
      react(out, h);
      diffuse(out.v, p);
    }
    out.t = s.t + h;
    guard(out);
    return out;
  }

 private:
  static void diffuse(Field& v, const Eigen::MatrixXd& pt) { v = v * pt; }

  void react(FieldState& s, double h) const {
    if (!sc_->reaction) return;
    const auto& net = sc_->network;
    const std::size_t q = net.species();
    const Eigen::VectorXd& mu = sc_->diffusion.mu();
    std::vector<double> base(q), probe(q);
    for (Eigen::Index j = 0; j < s.v.cols(); ++j) {
      for (std::size_t i = 0; i < q; ++i) base[i] = s.v(static_cast<Eigen::Index>(i), j);
      // Every stage moves along w, so the stages are scalars.
      auto stage = [&](double shift) {
        for (std::size_t i = 0; i < q; ++i) probe[i] = base[i] + shift * weights_[i];
        return clamped_G(net, probe);
      };
      const double k1 = stage(0.0);
      const double k2 = stage(0.5 * h * k1);
      const double k3 = stage(0.5 * h * k2);
      const double k4 = stage(h * k3);
      const double incr = h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      for (std::size_t i = 0; i < q; ++i) {
        double& x = s.v(static_cast<Eigen::Index>(i), j);
        x = base[i] + incr * weights_[i];
        if (x < 0.0) {
          s.clamp_l1 += mu[j] * -x;
          x = 0.0;
        }
      }
    }
  }

  static void guard(const FieldState& s) {
    for (Eigen::Index j = 0; j < s.v.cols(); ++j)
      for (Eigen::Index i = 0; i < s.v.rows(); ++i) {
        const double x = s.v(i, j);
        if (!std::isfinite(x) || std::abs(x) > kBlowUpThreshold) {
          std::ostringstream os;
          os << "blow-up: species " << i + 1 << " cell " << j << " value " << x << " at t = " << s.t;
          throw std::runtime_error(os.str());
        }
      }
  }

  const RDScenario* sc_;
  std::vector<double> weights_;
  Eigen::MatrixXd half_;
};

inline FieldState initial_state(const RDScenario& sc) { return FieldState{0.0, sc.v0, 0.0}; }

/// One Strang step of length sc.dt. Rebuilds the propagator; loops should use StrangStepper.
inline FieldState step(const FieldState& s, const RDScenario& sc) {
  return StrangStepper(sc).step(s);
}

struct SampleRecord {
  double t = 0.0;
  std::vector<double> distance;  ///< ||v_i - s_i||_{L2(mu)}
  std::vector<double> variance;  ///< Var_mu(v_i)
  double conservation_residual = 0.0;
  double min_concentration = 0.0;
  double clamp_l1 = 0.0;
  /// min over species and cells of (upper bound - v); negative means violated.
  double bound_margin = 0.0;
};

struct RunOptions {
  bool keep_history = false;
  /// Snapshot times are rounded to the nearest step.
  std::vector<double> snapshot_times;
};

struct RunResult {
  std::vector<double> means;
  std::vector<double> steady;
  double M4 = 0.0;  ///< (int (sum_i v_i^0)^4 dmu)^{1/2}
  std::vector<SampleRecord> samples;
  std::vector<FieldState> history;
  std::vector<FieldState> snapshots;
  FieldState final_state;
};

namespace detail {

/// Precomputed spectral data for functions that evolve by the semigroup alone.
class LinearTracker {
 public:
  LinearTracker(const DiscreteDiffusion& D, std::vector<std::vector<double>> combos, const Field& v0)
      : D_(&D), combos_(std::move(combos)) {
    for (const auto& z : combos_) coeffs_.push_back(D.spectral_coefficients(combine(z, v0)));
  }

  std::size_t size() const { return combos_.size(); }
  const std::vector<double>& combo(std::size_t k) const { return combos_[k]; }

  static GridFunction combine(const std::vector<double>& z, const Field& v) {
    GridFunction g = GridFunction::Zero(v.cols());
    for (std::size_t i = 0; i < z.size(); ++i)
      if (z[i] != 0.0) g += z[i] * v.row(static_cast<Eigen::Index>(i)).transpose();
    return g;
  }

  /// P_t applied to the k-th initial combination.
  GridFunction evolved(std::size_t k, double t) const {
    return D_->eigenvectors() * (coeffs_[k].array() * D_->damping(t).array()).matrix();
  }

 private:
  const DiscreteDiffusion* D_;
  std::vector<std::vector<double>> combos_;
  std::vector<Eigen::VectorXd> coeffs_;
};

/// Pairs (i, j) with w_i w_j < 0 and the combination sgn(w_i)(e_i/w_i - e_j/w_j),
/// which bounds v_i / |w_i| from above.
struct BoundPairs {
  std::vector<std::size_t> species;
  std::vector<std::vector<double>> combos;
};

inline BoundPairs bound_pairs(const ReactionNetwork& net) {
  BoundPairs out;
  const std::size_t q = net.species();
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < q; ++j) {
      const double wi = net.weight(i);
      const double wj = net.weight(j);
      if (wi * wj >= 0.0) continue;
      std::vector<double> z(q, 0.0);
      const double sg = wi > 0.0 ? 1.0 : -1.0;
      z[i] = sg / wi;
      z[j] = -sg / wj;
      out.species.push_back(i);
      out.combos.push_back(std::move(z));
    }
  return out;
}

}  // namespace detail

/// Pointwise upper bound for each species at time t (rows species, columns cells).
inline Field upper_bounds(const RDScenario& sc, double t) {
  const auto pairs = detail::bound_pairs(sc.network);
  const detail::LinearTracker tracker(sc.diffusion, pairs.combos, sc.v0);
  Field ub = Field::Constant(sc.v0.rows(), sc.v0.cols(), std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < pairs.species.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(pairs.species[k]);
    const double scale = std::abs(sc.network.weight(pairs.species[k]));
    ub.row(i) = ub.row(i).cwiseMin(scale * tracker.evolved(k, t).transpose());
  }
  return ub;
}

inline RunResult run(const RDScenario& sc, const RunOptions& opt = {}) {
  validate_scenario(sc);
  const auto& D = sc.diffusion;
  const auto& net = sc.network;
  const std::size_t q = net.species();

  RunResult res;
  const Eigen::VectorXd m = species_means(D, sc.v0);
  res.means.assign(m.data(), m.data() + m.size());
  res.steady = steady_state(net, res.means).s;
  const Eigen::VectorXd total = sc.v0.colwise().sum().transpose();
  res.M4 = std::sqrt(D.moment4(total));

  const detail::LinearTracker conserved(D, conservation_basis(net), sc.v0);
  const auto pairs = detail::bound_pairs(net);
  const detail::LinearTracker bounds(D, pairs.combos, sc.v0);

  auto record = [&](const FieldState& s) {
    SampleRecord r;
    r.t = s.t;
    for (std::size_t i = 0; i < q; ++i) {
      const GridFunction vi = s.v.row(static_cast<Eigen::Index>(i)).transpose();
      r.distance.push_back(D.norm((vi.array() - res.steady[i]).matrix()));
      r.variance.push_back(D.variance(vi));
    }
    if (sc.reaction) {
      for (std::size_t k = 0; k < conserved.size(); ++k) {
        const GridFunction diff =
            detail::LinearTracker::combine(conserved.combo(k), s.v) - conserved.evolved(k, s.t);
        r.conservation_residual = std::max(r.conservation_residual, D.norm(diff));
      }
    } else {
      // Without reaction every species is its own conserved quantity.
      for (std::size_t i = 0; i < q; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const GridFunction diff =
            s.v.row(row).transpose() - D.semigroup_apply(sc.v0.row(row).transpose(), s.t);
        r.conservation_residual = std::max(r.conservation_residual, D.norm(diff));
      }
    }
    r.min_concentration = s.v.minCoeff();
    r.clamp_l1 = s.clamp_l1;
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pairs.species.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(pairs.species[k]);
      const double scale = std::abs(net.weight(pairs.species[k]));
      const GridFunction ub = scale * bounds.evolved(k, s.t);
      margin = std::min(margin, (ub - s.v.row(i).transpose()).minCoeff());
    }
    r.bound_margin = margin;
    res.samples.push_back(std::move(r));
  };

  const StrangStepper stepper(sc);
  const auto full_steps = static_cast<std::size_t>(std::floor(sc.t_end / sc.dt * (1.0 + 1e-12)));
  const double remainder = sc.t_end - static_cast<double>(full_steps) * sc.dt;
  const bool partial = remainder > 1e-12 * sc.dt;
  const std::size_t total_steps = full_steps + (partial ? 1 : 0);

  std::vector<std::size_t> snapshot_steps;
  for (double ts : opt.snapshot_times)
    snapshot_steps.push_back(static_cast<std::size_t>(std::llround(std::max(0.0, ts) / sc.dt)));

  FieldState s = initial_state(sc);
  auto observe = [&](std::size_t k) {
    if (k % sc.sample_every == 0 || k == total_steps) {
      record(s);
      if (opt.keep_history) res.history.push_back(s);
    }
    for (std::size_t ks : snapshot_steps)
      if (ks == k || (k == total_steps && ks > total_steps)) res.snapshots.push_back(s);
  };

  observe(0);
  for (std::size_t k = 1; k <= total_steps; ++k) {
    s = (k > full_steps) ? stepper.step(s, remainder) : stepper.step(s);
    if (k == total_steps) s.t = sc.t_end;
    observe(k);
  }
  res.final_state = std::move(s);
  return res;
}

struct ConservationReport {
  /// max over samples of ||z.v(t) - P_t(z.v0)||_{L2(mu)}, one entry per basis vector.
  std::vector<double> residual;
  /// max over samples of |sum_i z_i int v_i dmu - sum_i z_i int v_i^0 dmu|.
  std::vector<double> mean_drift;
  double max_residual = 0.0;
  double max_mean_drift = 0.0;
};

/// Checks the conserved combinations along a stored history; `basis` defaults to the network's.
inline ConservationReport conservation_check(const std::vector<FieldState>& history,
                                             const RDScenario& sc,
                                             std::vector<std::vector<double>> basis = {}) {
  if (history.empty()) throw std::invalid_argument("empty history");
  if (basis.empty()) basis = conservation_basis(sc.network);
  const auto& D = sc.diffusion;
  const detail::LinearTracker tracker(D, basis, sc.v0);
  ConservationReport rep;
  rep.residual.assign(basis.size(), 0.0);
  rep.mean_drift.assign(basis.size(), 0.0);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double m0 = D.mean(detail::LinearTracker::combine(basis[k], sc.v0));
    for (const auto& s : history) {
      const GridFunction zv = detail::LinearTracker::combine(basis[k], s.v);
      rep.residual[k] = std::max(rep.residual[k], D.norm(zv - tracker.evolved(k, s.t)));
      rep.mean_drift[k] = std::max(rep.mean_drift[k], std::abs(D.mean(zv) - m0));
    }
    rep.max_residual = std::max(rep.max_residual, rep.residual[k]);
    rep.max_mean_drift = std::max(rep.max_mean_drift, rep.mean_drift[k]);
  }
  return rep;
}

inline void write_series_csv(std::ostream& os, const RunResult& res) {
  os.precision(17);
  const std::size_t q = res.steady.size();
  os << "t";
  for (std::size_t i = 1; i <= q; ++i) os << ",dist_" << i;
  for (std::size_t i = 1; i <= q; ++i) os << ",var_" << i;
  os << ",conservation_residual,min_concentration,clamp_l1,bound_margin\n";
  for (const auto& r : res.samples) {
    os << r.t;
    for (double d : r.distance) os << ',' << d;
    for (double v : r.variance) os << ',' << v;
    os << ',' << r.conservation_residual << ',' << r.min_concentration << ',' << r.clamp_l1 << ','
       << r.bound_margin << '\n';
  }
}

inline void write_snapshot_csv(std::ostream& os, const DiscreteDiffusion& D, const FieldState& s) {
  os.precision(17);
  os << "x";
  for (Eigen::Index i = 1; i <= s.v.rows(); ++i) os << ",v_" << i;
  os << '\n';
  for (Eigen::Index j = 0; j < s.v.cols(); ++j) {
    os << D.x()[j];
    for (Eigen::Index i = 0; i < s.v.rows(); ++i) os << ',' << s.v(i, j);
    os << '\n';
  }
}

}  // namespace rdlab
