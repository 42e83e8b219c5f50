#pragma once

// Reversible mass-action reaction  sum alpha_i A_i <=> sum beta_i A_i.
//
// Concentrations are rescaled (v_i = lambda_i a_i) so that forward and
// backward monomials carry the same weight; the rescaled system reads
//   d/dt v_i = w_i * G(v),   w_i = k_i (beta_i - alpha_i),
//   G(v)     = prod v^alpha - prod v^beta.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rdlab {

namespace detail {

inline double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace detail

struct RateNormalization {
  std::vector<double> lambda_scaling;
  std::vector<double> k_norm;
};

/// Checks stoichiometry. Throws std::invalid_argument naming the first offending species.
inline void validate_stoichiometry(std::span<const int> alpha, std::span<const int> beta) {
  if (alpha.size() != beta.size())
    throw std::invalid_argument("alpha and beta must have the same length");
  if (alpha.size() < 2) throw std::invalid_argument("a reaction needs at least two species");
  bool gains = false;
  bool losses = false;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] < 0 || beta[i] < 0)
      throw std::invalid_argument("stoichiometric coefficients must be nonnegative (species " +
                                  std::to_string(i + 1) + ")");
    if (alpha[i] == beta[i])
      throw std::invalid_argument("species " + std::to_string(i + 1) +
                                  " is a catalyzer (alpha == beta)");
    gains = gains || beta[i] > alpha[i];
    losses = losses || beta[i] < alpha[i];
  }
  if (!gains || !losses)
    throw std::invalid_argument(
        "beta - alpha must change sign across species (mass conservation)");
}

/// lambda_1 = (k/l)^(1/(alpha_1 - beta_1)), lambda_i = 1 otherwise;
/// k_i = lambda_i l / prod lambda_j^alpha_j.
inline RateNormalization normalize_rates(std::span<const int> alpha, std::span<const int> beta,
                                         double rate_forward, double rate_backward) {
  validate_stoichiometry(alpha, beta);
  if (!(rate_forward > 0.0) || !(rate_backward > 0.0) || !std::isfinite(rate_forward) ||
      !std::isfinite(rate_backward))
    throw std::invalid_argument("rate constants must be positive and finite");

  const std::size_t q = alpha.size();
  RateNormalization out;
  out.lambda_scaling.assign(q, 1.0);
  out.lambda_scaling[0] =
      std::pow(rate_backward / rate_forward, 1.0 / static_cast<double>(alpha[0] - beta[0]));

  double forward_scale = 1.0;
  for (std::size_t j = 0; j < q; ++j) forward_scale *= detail::ipow(out.lambda_scaling[j], alpha[j]);
  out.k_norm.resize(q);
  for (std::size_t i = 0; i < q; ++i)
    out.k_norm[i] = out.lambda_scaling[i] * rate_forward / forward_scale;
  return out;
}

class ReactionNetwork {
 public:
  ReactionNetwork(std::vector<int> alpha, std::vector<int> beta, double rate_forward,
                  double rate_backward)
      : alpha_(std::move(alpha)),
        beta_(std::move(beta)),
        rate_forward_(rate_forward),
        rate_backward_(rate_backward) {
    auto rates = normalize_rates(alpha_, beta_, rate_forward_, rate_backward_);
    lambda_ = std::move(rates.lambda_scaling);
    k_norm_ = std::move(rates.k_norm);
  }

  std::size_t species() const { return alpha_.size(); }
  const std::vector<int>& alpha() const { return alpha_; }
  const std::vector<int>& beta() const { return beta_; }
  double rate_forward() const { return rate_forward_; }
  double rate_backward() const { return rate_backward_; }
  const std::vector<double>& lambda_scaling() const { return lambda_; }
  const std::vector<double>& k_norm() const { return k_norm_; }

  /// beta_i - alpha_i
  int net_change(std::size_t i) const { return beta_[i] - alpha_[i]; }

  /// w_i = k_i (beta_i - alpha_i); the direction in which the reaction moves v.
  double weight(std::size_t i) const { return k_norm_[i] * net_change(i); }

  std::vector<double> weights() const {
    std::vector<double> w(species());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = weight(i);
    return w;
  }

  /// A + B <=> C + D
  bool is_two_by_two() const {
    return alpha_ == std::vector<int>{1, 1, 0, 0} && beta_ == std::vector<int>{0, 0, 1, 1};
  }

  /// alpha_i * beta_i == 0 for every species.
  bool has_disjoint_sides() const {
    for (std::size_t i = 0; i < species(); ++i)
      if (alpha_[i] * beta_[i] != 0) return false;
    return true;
  }

  std::string describe() const {
    std::ostringstream os;
    auto side = [&](const std::vector<int>& c) {
      bool first = true;
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] == 0) continue;
        if (!first) os << " + ";
        if (c[i] != 1) os << c[i];
        os << "A" << i + 1;
        first = false;
      }
    };
    side(alpha_);
    os << " <=> ";
    side(beta_);
    return os.str();
  }

 private:
  std::vector<int> alpha_;
  std::vector<int> beta_;
  double rate_forward_;
  double rate_backward_;
  std::vector<double> lambda_;
  std::vector<double> k_norm_;
};

/// G(v) = prod v_j^alpha_j - prod v_j^beta_j
inline double mass_action_G(const ReactionNetwork& net, std::span<const double> v) {
  double fwd = 1.0;
  double bwd = 1.0;
  for (std::size_t j = 0; j < net.species(); ++j) {
    fwd *= detail::ipow(v[j], net.alpha()[j]);
    bwd *= detail::ipow(v[j], net.beta()[j]);
  }
  return fwd - bwd;
}

/// G evaluated on positive parts (v)_+ = max(v, 0).
inline double clamped_G(const ReactionNetwork& net, std::span<const double> v) {
  double fwd = 1.0;
  double bwd = 1.0;
  for (std::size_t j = 0; j < net.species(); ++j) {
    const double p = detail::positive_part(v[j]);
    fwd *= detail::ipow(p, net.alpha()[j]);
    bwd *= detail::ipow(p, net.beta()[j]);
  }
  return fwd - bwd;
}

/// Basis of S = {z : sum z_i w_i = 0}; z^(j) = e_1 / w_1 - e_{j+1} / w_{j+1}.
inline std::vector<std::vector<double>> conservation_basis(const ReactionNetwork& net) {
  const std::size_t q = net.species();
  const double w1 = net.weight(0);
  std::vector<std::vector<double>> basis;
  basis.reserve(q - 1);
  for (std::size_t j = 1; j < q; ++j) {
    std::vector<double> z(q, 0.0);
    z[0] = 1.0 / w1;
    z[j] = -1.0 / net.weight(j);
    basis.push_back(std::move(z));
  }
  return basis;
}

struct SteadyState {
  std::vector<double> s;
  double t_param = 0.0;
  double product_residual = 0.0;
};

/// Feasible parameter interval (a, b) of the line s(t) = m + t w.
struct PhiDomain {
  double lower;
  double upper;
};

inline PhiDomain phi_domain(const ReactionNetwork& net, std::span<const double> means) {
  PhiDomain d{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < net.species(); ++i) {
    const double w = net.weight(i);
    const double edge = -means[i] / w;
    if (w > 0.0)
      d.lower = std::max(d.lower, edge);
    else
      d.upper = std::min(d.upper, edge);
  }
  return d;
}

/// log phi(t) = sum (beta_i - alpha_i) log(m_i + t w_i); strictly increasing on (a, b).
inline double log_phi(const ReactionNetwork& net, std::span<const double> means, double t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < net.species(); ++i)
    acc += net.net_change(i) * std::log(means[i] + t * net.weight(i));
  return acc;
}

/// Bisection for log phi = 0 on [lo, hi]; requires log phi(lo) < 0 < log phi(hi).
inline double bisect_log_phi(const ReactionNetwork& net, std::span<const double> means, double lo,
                             double hi, double width_tol) {
  double flo = log_phi(net, means, lo);
  double fhi = log_phi(net, means, hi);
  if (!(flo < 0.0 && fhi > 0.0))
    throw std::logic_error("log phi bracket does not enclose a sign change");
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) return mid;
    const double fm = log_phi(net, means, mid);
    if (std::abs(fm) <= 1e-12 || hi - lo <= width_tol) return mid;
    if (fm < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// The unique positive x-independent steady state on the affine line through the means.
inline SteadyState steady_state(const ReactionNetwork& net, std::span<const double> means) {
  const std::size_t q = net.species();
  if (means.size() != q) throw std::invalid_argument("means must have one entry per species");
  for (std::size_t i = 0; i < q; ++i)
    if (!(means[i] > 0.0) || !std::isfinite(means[i]))
      throw std::invalid_argument("initial mean of species " + std::to_string(i + 1) +
                                  " must be positive");

  const PhiDomain dom = phi_domain(net, means);
  if (!(dom.lower < dom.upper)) throw std::logic_error("empty feasible interval for the steady state");
  const double span = dom.upper - dom.lower;

  // Endpoints are singular (phi = 0 and phi = inf); step inside by a relative offset.
  double offset = 1e-13;
  double lo = dom.lower + offset * span;
  double hi = dom.upper - offset * span;
  while (offset > 1e-30 && (log_phi(net, means, lo) >= 0.0 || log_phi(net, means, hi) <= 0.0)) {
    offset *= 1e-3;
    lo = dom.lower + offset * span;
    hi = dom.upper - offset * span;
  }

  SteadyState out;
  out.t_param = bisect_log_phi(net, means, lo, hi, 1e-14 * span);
  out.s.resize(q);
  double prod = 1.0;
  for (std::size_t i = 0; i < q; ++i) {
    out.s[i] = means[i] + out.t_param * net.weight(i);
    prod *= std::pow(out.s[i], net.net_change(i));
  }
  out.product_residual = std::abs(prod - 1.0);
  return out;
}

/// C = prod s_i^alpha_i * sum k_i (beta_i - alpha_i)^2 / s_i
inline double optimal_rate(const ReactionNetwork& net, std::span<const double> s) {
  double prod = 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < net.species(); ++i) {
    prod *= detail::ipow(s[i], net.alpha()[i]);
    const double d = net.net_change(i);
    sum += net.k_norm()[i] * d * d / s[i];
  }
  return prod * sum;
}

}  // namespace rdlab
