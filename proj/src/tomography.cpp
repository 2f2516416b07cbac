#include "noontomo/tomography.hpp"

#include <cmath>
#include <vector>

namespace noontomo::tomography {

namespace {

// Congruence weights sqrt(m!(N-m)!).
RealVector congruence_diagonal(int n_photons) {
  RealVector f(n_photons + 1);
  std::vector<double> fact(n_photons + 1);
  fact[0] = 1.0;
  for (int k = 1; k <= n_photons; ++k) fact[k] = fact[k - 1] * double(k);
  for (int m = 0; m <= n_photons; ++m) f(m) = std::sqrt(fact[m] * fact[n_photons - m]);
  return f;
}

// Hermitian row matrices H_k with model_k = Re tr(H_k tau); H_k is the
// transpose of the design row reshaped row-major.
std::vector<ComplexMatrix> row_matrices(const measurement::DesignMatrix& design) {
  const int d = design.n_photons + 1;
  std::vector<ComplexMatrix> h(design.entries.rows());
  for (Eigen::Index k = 0; k < design.entries.rows(); ++k) {
    ComplexMatrix s(d, d);
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n) s(m, n) = design.entries(k, m * d + n);
    h[k] = s.transpose();
  }
  return h;
}

double model_value(const ComplexMatrix& h, const ComplexMatrix& tau) {
  // tr(H tau) = <H, tau>_F for Hermitian H; equals the design-row sum
  // sum_{mn} R^{mn} tau_{mn} because H is the conjugated row matrix.
  return (h.array().conjugate() * tau.array()).sum().real();
}

ComplexMatrix project_psd(const ComplexMatrix& x) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es((x + x.adjoint()) / 2.0);
  RealVector clamped = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().adjoint();
}

void check_counts(const measurement::DesignMatrix& design, const RealVector& counts) {
  if (counts.size() != design.entries.rows())
    fail_input("dimension-mismatch", "counts length does not match the design matrix");
  for (Eigen::Index k = 0; k < counts.size(); ++k)
    if (!(counts(k) >= 0.0)) fail_input("schema-invalid-input", "counts must be nonnegative");
}

}  // namespace

CoherenceMatrix coherence_from_fock(const fock::SectorMatrix& sector) {
  const RealVector f = congruence_diagonal(sector.n_photons);
  return CoherenceMatrix{sector.n_photons,
                         f.asDiagonal() * sector.matrix * f.asDiagonal()};
}

fock::SectorMatrix fock_from_coherence(const CoherenceMatrix& coherences, bool normalize) {
  const RealVector f = congruence_diagonal(coherences.n_photons);
  const RealVector inv = f.cwiseInverse();
  ComplexMatrix sigma = inv.asDiagonal() * coherences.matrix * inv.asDiagonal();
  if (normalize) {
    const double tr = sigma.trace().real();
    if (!(tr > 1e-300))
      fail_numerical("zero-trace", "nothing to normalize: sector trace is " + std::to_string(tr));
    sigma /= tr;
  }
  return fock::SectorMatrix{coherences.n_photons, std::move(sigma), normalize};
}

CoherenceMatrix linear_invert(const measurement::DesignMatrix& design, const RealVector& counts) {
  check_counts(design, counts);
  const int d = design.n_photons + 1;
  const ComplexVector rhs = counts.cast<Complex>();
  const ComplexVector x = design.entries.colPivHouseholderQr().solve(rhs);
  ComplexMatrix rho(d, d);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n) rho(m, n) = x(m * d + n);
  rho = ((rho + rho.adjoint()) / 2.0).eval();
  return CoherenceMatrix{design.n_photons, std::move(rho)};
}

double likelihood_value(const fock::SectorMatrix& estimate, const measurement::DesignMatrix& design,
                        const RealVector& counts) {
  check_counts(design, counts);
  if (estimate.n_photons != design.n_photons)
    fail_input("dimension-mismatch", "estimate and design photon numbers differ");
  const CoherenceMatrix rho = coherence_from_fock(estimate);
  const auto h = row_matrices(design);
  double acc = 0.0;
  for (size_t k = 0; k < h.size(); ++k) {
    const double r = model_value(h[k], rho.matrix) - counts(Eigen::Index(k));
    acc += r * r / std::max(counts(Eigen::Index(k)), 1.0);
  }
  return acc;
}

std::pair<fock::SectorMatrix, SolverReport> ml_reconstruct(const measurement::DesignMatrix& design,
                                                           const RealVector& counts,
                                                           const SolverOptions& options) {
  check_counts(design, counts);
  const int d = design.n_photons + 1;
  const auto h = row_matrices(design);
  const int n_rows = int(h.size());

  // Rescale counts to O(1) so the KKT gate has a fixed meaning.
  const double scale = std::max(1.0, counts.maxCoeff());
  RealVector b(n_rows), w(n_rows);
  for (int k = 0; k < n_rows; ++k) {
    b(k) = counts(k) / scale;
    w(k) = scale / std::max(counts(k), 1.0);
  }

  const auto objective = [&](const ComplexMatrix& tau) {
    double acc = 0.0;
    for (int k = 0; k < n_rows; ++k) {
      const double r = model_value(h[k], tau) - b(k);
      acc += w(k) * r * r;
    }
    return acc;
  };
  const auto gradient = [&](const ComplexMatrix& tau) {
    ComplexMatrix g = ComplexMatrix::Zero(d, d);
    for (int k = 0; k < n_rows; ++k)
      g += (2.0 * w(k) * (model_value(h[k], tau) - b(k))) * h[k];
    return g;
  };

  // Lipschitz constant of the gradient: largest eigenvalue of the quadratic
  // form tau -> 2 sum_k w_k tr(H_k tau) H_k, by power iteration.
  ComplexMatrix v = ComplexMatrix::Identity(d, d) / std::sqrt(double(d));
  v(0, 0) += 0.01;  // break symmetry deterministically
  double lipschitz = 1.0;
  for (int it = 0; it < 100; ++it) {
    ComplexMatrix qv = ComplexMatrix::Zero(d, d);
    for (int k = 0; k < n_rows; ++k) qv += (2.0 * w(k) * model_value(h[k], v)) * h[k];
    lipschitz = qv.norm();
    if (lipschitz < 1e-300) { lipschitz = 1.0; break; }
    v = qv / lipschitz;
  }
  lipschitz *= 1.05;

  // Warm start at the PSD projection of the linear inversion.
  ComplexMatrix x = project_psd(linear_invert(design, counts).matrix / scale);
  ComplexMatrix y = x;
  double t = 1.0;
  double fx = objective(x);

  SolverReport report;
  std::vector<double> history{fx};
  constexpr double kConvergedKkt = 1e-8;

  const auto kkt_residual = [&](const ComplexMatrix& point) {
    return (point - project_psd(point - gradient(point) / lipschitz)).norm() * lipschitz;
  };

  int iter = 0;
  double kkt = kkt_residual(x);
  for (; iter < options.max_iterations && kkt >= options.kkt_tol; ++iter) {
    ComplexMatrix x_next = project_psd(y - gradient(y) / lipschitz);
    double fx_next = objective(x_next);
    if (fx_next > fx) {  // monotone restart: plain projected-gradient step
      x_next = project_psd(x - gradient(x) / lipschitz);
      fx_next = objective(x_next);
      t = 1.0;
    }
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    y = x_next + ((t - 1.0) / t_next) * (x_next - x);
    x = std::move(x_next);
    fx = fx_next;
    t = t_next;
    kkt = kkt_residual(x);
    history.push_back(fx);

    if (int(history.size()) > options.rel_obj_window) {
      const double f_old = history[history.size() - 1 - options.rel_obj_window];
      if ((f_old - fx) < options.rel_obj_tol * std::max(f_old, 1e-300) && kkt < kConvergedKkt) break;
    }
  }

  report.iterations = iter;
  report.kkt_residual = kkt;
  report.converged = kkt < kConvergedKkt;
  report.objective = scale * fx;

  const CoherenceMatrix tau{design.n_photons, x * scale};
  return {fock_from_coherence(tau, true), report};
}

}  // namespace noontomo::tomography
