#pragma once

// Finite-volume diffusion generators on [0, length] with zero-flux ends.
//
//   (L f)_i = 1/(rho_i dx) * (F_{i+1/2} - F_{i-1/2}),
//   F_{i+1/2} = rho_{i+1/2} a_{i+1/2} (f_{i+1} - f_i) / dx,   rho = exp(-psi).
//
// The invariant measure mu_i ~ rho_i dx makes L exactly mu-symmetric and
// mu-invariant, with nonnegative off-diagonal entries and zero row sums.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rdlab {

using GridFunction = Eigen::VectorXd;
using ScalarField = std::function<double(double)>;

class DiscreteDiffusion {
 public:
  std::size_t size() const { return static_cast<std::size_t>(x_.size()); }
  double length() const { return length_; }
  double dx() const { return length_ / static_cast<double>(x_.size()); }
  const Eigen::VectorXd& x() const { return x_; }
  const Eigen::VectorXd& psi() const { return psi_; }
  const Eigen::VectorXd& diffusivity() const { return diffusivity_; }
  const Eigen::MatrixXd& generator() const { return generator_; }
  const Eigen::VectorXd& mu() const { return mu_; }
  /// Spectrum of -L, ascending.
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  /// Columns are mu-orthonormal eigenvectors; column 0 is the constant 1.
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  double gap() const { return eigenvalues_[1]; }
  double C_SG() const { return 0.5 / eigenvalues_[1]; }

  double mean(const GridFunction& f) const { return mu_.dot(f); }
  double inner(const GridFunction& f, const GridFunction& g) const {
    return (mu_.array() * f.array() * g.array()).sum();
  }
  double norm(const GridFunction& f) const { return std::sqrt(inner(f, f)); }

  GridFunction apply_generator(const GridFunction& f) const { return generator_ * f; }

  /// <f, e_j>_mu for every mode j.
  Eigen::VectorXd spectral_coefficients(const GridFunction& f) const {
    return eigenvectors_.transpose() * (mu_.array() * f.array()).matrix();
  }

  /// exp(-lambda_j t) damping; mode 0 is never damped.
  Eigen::VectorXd damping(double t) const {
    Eigen::VectorXd d = (-eigenvalues_.array() * t).exp().matrix();
    d[0] = 1.0;
    return d;
  }

  /// P_t f by spectral synthesis.
  GridFunction semigroup_apply(const GridFunction& f, double t) const {
    check_time(t);
    if (t == 0.0) return f;
    Eigen::VectorXd c = spectral_coefficients(f);
    c.array() *= damping(t).array();
    return eigenvectors_ * c;
  }

  /// Dense matrix of P_t acting on column vectors.
  Eigen::MatrixXd propagator(double t) const {
    check_time(t);
    const Eigen::VectorXd d = damping(t);
    return eigenvectors_ * d.asDiagonal() * eigenvectors_.transpose() * mu_.asDiagonal();
  }

  /// mu-weighted central second moment.
  double variance(const GridFunction& f) const {
    const double m = mean(f);
    return (mu_.array() * (f.array() - m).square()).sum();
  }

  /// mu-weighted raw fourth moment.
  double moment4(const GridFunction& f) const { return (mu_.array() * f.array().pow(4)).sum(); }

  /// Samples a closed-form field at the cell centres.
  GridFunction sample(const ScalarField& fn) const {
    GridFunction g(x_.size());
    for (Eigen::Index i = 0; i < x_.size(); ++i) g[i] = fn(x_[i]);
    return g;
  }

  friend DiscreteDiffusion build_generator(std::size_t n, double domain_length,
                                           const ScalarField& psi,
                                           const ScalarField& diffusivity);

 private:
  static void check_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t))
      throw std::invalid_argument("semigroup time must be finite and nonnegative");
  }

  double length_ = 0.0;
  Eigen::VectorXd x_;
  Eigen::VectorXd psi_;
  Eigen::VectorXd diffusivity_;
  Eigen::MatrixXd generator_;
  Eigen::VectorXd mu_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

inline DiscreteDiffusion build_generator(std::size_t n, double domain_length,
                                         const ScalarField& psi, const ScalarField& diffusivity) {
  if (n < 3) throw std::invalid_argument("need at least 3 grid cells");
  if (!(domain_length > 0.0) || !std::isfinite(domain_length))
    throw std::invalid_argument("domain length must be positive");

  const auto N = static_cast<Eigen::Index>(n);
  const double h = domain_length / static_cast<double>(n);

  DiscreteDiffusion D;
  D.length_ = domain_length;
  D.x_.resize(N);
  D.psi_.resize(N);
  D.diffusivity_.resize(N + 1);
  for (Eigen::Index i = 0; i < N; ++i) {
    D.x_[i] = (static_cast<double>(i) + 0.5) * h;
    D.psi_[i] = psi(D.x_[i]);
    if (!std::isfinite(D.psi_[i]))
      throw std::invalid_argument("potential is not finite at x = " + std::to_string(D.x_[i]));
  }
  for (Eigen::Index f = 0; f <= N; ++f) {
    const double xf = static_cast<double>(f) * h;
    D.diffusivity_[f] = diffusivity(xf);
    if (!(D.diffusivity_[f] > 0.0) || !std::isfinite(D.diffusivity_[f]))
      throw std::invalid_argument("diffusivity must be positive, got " +
                                  std::to_string(D.diffusivity_[f]) + " at x = " +
                                  std::to_string(xf));
  }

  // Shift the potential before exponentiating; mu is normalised afterwards.
  const double psi_min = D.psi_.minCoeff();
  const Eigen::VectorXd rho = (-(D.psi_.array() - psi_min)).exp().matrix();
  D.mu_ = rho / rho.sum();

  // Interior face conductances rho_{i+1/2} a_{i+1/2} / dx^2.
  Eigen::VectorXd kappa(N - 1);
  for (Eigen::Index f = 1; f < N; ++f) {
    const double xf = static_cast<double>(f) * h;
    const double rho_face = std::exp(-(psi(xf) - psi_min));
    kappa[f - 1] = rho_face * D.diffusivity_[f] / (h * h);
  }

  D.generator_ = Eigen::MatrixXd::Zero(N, N);
  for (Eigen::Index f = 0; f + 1 < N; ++f) {
    const double k = kappa[f];
    D.generator_(f, f + 1) = k / rho[f];
    D.generator_(f + 1, f) = k / rho[f + 1];
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    double off = 0.0;
    if (i > 0) off += D.generator_(i, i - 1);
    if (i + 1 < N) off += D.generator_(i, i + 1);
    D.generator_(i, i) = -off;
  }

  // -L is similar to the symmetric tridiagonal S = M^{1/2} (-L) M^{-1/2}.
  Eigen::VectorXd diag = -D.generator_.diagonal();
  Eigen::VectorXd sub(N - 1);
  for (Eigen::Index f = 0; f + 1 < N; ++f) sub[f] = -kappa[f] / std::sqrt(rho[f] * rho[f + 1]);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw std::runtime_error("tridiagonal eigensolver failed");

  D.eigenvalues_ = es.eigenvalues();
  const Eigen::VectorXd inv_sqrt_mu = D.mu_.array().rsqrt().matrix();
  D.eigenvectors_ = inv_sqrt_mu.asDiagonal() * es.eigenvectors();
  D.eigenvectors_.col(0).setOnes();
  for (Eigen::Index j = 1; j < N; ++j) {
    // Exact mu-orthogonality to constants keeps P_t 1 = 1 and mu^T P_t = mu^T at round-off.
    D.eigenvectors_.col(j).array() -= D.mu_.dot(D.eigenvectors_.col(j));
    // Sign convention: first entry nonnegative.
    if (D.eigenvectors_(0, j) < 0.0) D.eigenvectors_.col(j) *= -1.0;
  }

  if (!(D.eigenvalues_[1] > 0.0)) throw std::runtime_error("spectral gap is not positive");
  return D;
}

inline DiscreteDiffusion build_generator(std::size_t n, double domain_length) {
  return build_generator(n, domain_length, [](double) { return 0.0; }, [](double) { return 1.0; });
}

/// C_SG = 1 / (2 lambda_1); Var_mu(P_t f) <= exp(-t / C_SG) Var_mu(f).
inline double spectral_gap(const DiscreteDiffusion& D) {
  if (!(D.eigenvalues()[1] > 0.0)) throw std::domain_error("no spectral gap");
  return D.C_SG();
}

struct RefinementRow {
  std::size_t n;
  double lambda1;
  double c_sg;
};

struct RefinementStudy {
  std::vector<RefinementRow> rows;
  /// log2 of successive difference ratios, one per consecutive triple.
  std::vector<double> observed_order;
  /// Richardson extrapolation of lambda_1 from the two finest grids (order 2).
  double lambda1_extrapolated = 0.0;
  double c_sg_extrapolated = 0.0;
};

/// Spectral gap on successively refined grids; sizes should double.
inline RefinementStudy refine_spectral_gap(const std::vector<std::size_t>& sizes,
                                           double domain_length, const ScalarField& psi,
                                           const ScalarField& diffusivity) {
  if (sizes.size() < 2) throw std::invalid_argument("refinement needs at least two grids");
  RefinementStudy study;
  for (std::size_t n : sizes) {
    const auto D = build_generator(n, domain_length, psi, diffusivity);
    study.rows.push_back({n, D.gap(), D.C_SG()});
  }
  for (std::size_t k = 0; k + 2 < study.rows.size(); ++k) {
    const double d1 = study.rows[k].lambda1 - study.rows[k + 1].lambda1;
    const double d2 = study.rows[k + 1].lambda1 - study.rows[k + 2].lambda1;
    study.observed_order.push_back(std::log2(std::abs(d1 / d2)));
  }
  const auto& coarse = study.rows[study.rows.size() - 2];
  const auto& fine = study.rows.back();
  const double ratio = static_cast<double>(fine.n) / static_cast<double>(coarse.n);
  const double r2 = ratio * ratio;
  study.lambda1_extrapolated = (r2 * fine.lambda1 - coarse.lambda1) / (r2 - 1.0);
  study.c_sg_extrapolated = 0.5 / study.lambda1_extrapolated;
  return study;
}

inline void write_grid_function_csv(std::ostream& os, const DiscreteDiffusion& D,
                                    const GridFunction& f) {
  os.precision(17);
  os << "x,value\n";
  for (Eigen::Index i = 0; i < f.size(); ++i) os << D.x()[i] << ',' << f[i] << '\n';
}

inline void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
  os.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
}

}  // namespace rdlab
