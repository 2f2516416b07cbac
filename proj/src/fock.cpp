#include "noontomo/fock.hpp"

#include <cmath>
#include <vector>

namespace noontomo::fock {

namespace {

constexpr double kTailTolerance = 1e-6;
constexpr double kHermTolerance = 1e-12;
constexpr double kPsdTolerance = -1e-10;

void check_n_max(int n_max) {
  if (n_max < 0) fail_input("invalid-config", "n_max must be nonnegative, got " + std::to_string(n_max));
}

}  // namespace

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 0; i < k; ++i) r = r * double(n - i) / double(i + 1);
  return r;
}

void TwoModeState::validate() const {
  const int d = dim();
  if (matrix.rows() != d || matrix.cols() != d)
    fail_input("dimension-mismatch", "state matrix does not match n_max");
  if ((matrix - matrix.adjoint()).cwiseAbs().maxCoeff() > kHermTolerance)
    fail_numerical("non-PSD", "state matrix is not Hermitian");
  const double tr = trace();
  if (tr < 1.0 - trace_slack || tr > 1.0 + 1e-12)
    fail_numerical("non-PSD", "state trace " + std::to_string(tr) + " outside [1 - slack, 1]");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(matrix, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < kPsdTolerance)
    fail_numerical("non-PSD", "state has eigenvalue " + std::to_string(es.eigenvalues().minCoeff()));
}

ComplexVector coherent_state(Complex alpha, int n_max) {
  check_n_max(n_max);
  ComplexVector amps(n_max + 1);
  amps(0) = 1.0;
  for (int n = 1; n <= n_max; ++n) amps(n) = amps(n - 1) * alpha / std::sqrt(double(n));
  const double kept = amps.squaredNorm();          // = sum |alpha|^{2n}/n!
  const double total = std::exp(std::norm(alpha)); // exact series sum
  const double tail = 1.0 - kept / total;
  if (tail > kTailTolerance)
    fail_input("cutoff-too-small",
               "coherent-state tail mass " + std::to_string(tail) + " at n_max " + std::to_string(n_max));
  return amps / std::sqrt(kept);
}

ComplexVector spdc_state(double epsilon, int n_max) {
  check_n_max(n_max);
  if (epsilon < 0.0 || epsilon >= 1.0)
    fail_input("epsilon-out-of-range", "epsilon must lie in [0, 1), got " + std::to_string(epsilon));
  ComplexVector amps = ComplexVector::Zero(n_max + 1);
  amps(0) = 1.0;
  double u = 1.0;  // amplitude at |2n>: u_n = u_{n-1} * eps * sqrt((2n-1)/(2n))
  for (int n = 1; 2 * n <= n_max; ++n) {
    u *= epsilon * std::sqrt(double(2 * n - 1) / double(2 * n));
    amps(2 * n) = u;
  }
  const double kept = amps.squaredNorm();
  const double total = 1.0 / std::sqrt(1.0 - epsilon * epsilon);  // exact series sum
  const double tail = 1.0 - kept / total;
  if (tail > kTailTolerance)
    fail_input("cutoff-too-small",
               "squeezed-vacuum tail mass " + std::to_string(tail) + " at n_max " + std::to_string(n_max));
  return amps / std::sqrt(kept);
}

TwoModeState pure_product(const ComplexVector& mode1, const ComplexVector& mode2, int n_max) {
  check_n_max(n_max);
  if (mode1.size() < n_max + 1 || mode2.size() < n_max + 1)
    fail_input("dimension-mismatch", "mode amplitude vectors shorter than n_max + 1");
  const int d = dimension(n_max);
  ComplexVector psi = ComplexVector::Zero(d);
  for (int m = 0; m <= n_max; ++m)
    for (int n = 0; n + m <= n_max; ++n) psi(basis_index(m, n)) = mode1(m) * mode2(n);
  TwoModeState state{n_max, psi * psi.adjoint()};
  const double tr = state.trace();
  if (tr < 1.0 - TwoModeState::trace_slack)
    fail_input("cutoff-too-small", "product-state cross mass " + std::to_string(1.0 - tr) + " dropped");
  return state;
}

Eigen::Matrix2cd su2_matrix(const SU2Params& params) {
  const double c = std::cos(params.theta), s = std::sin(params.theta);
  Eigen::Matrix2cd rot;
  rot << c, -s, s, c;
  Eigen::Matrix2cd mix;
  mix << 1, -1, 1, 1;
  mix /= std::sqrt(2.0);
  Eigen::Matrix2cd ret = Eigen::Matrix2cd::Zero();
  ret(0, 0) = std::polar(1.0, -params.phi / 2.0);
  ret(1, 1) = std::polar(1.0, +params.phi / 2.0);
  return rot * mix * ret;
}

ComplexMatrix su2_lift(const Eigen::Matrix2cd& u, int n_max) {
  check_n_max(n_max);
  const int d = dimension(n_max);
  ComplexMatrix lift = ComplexMatrix::Zero(d, d);

  std::vector<double> sqrt_fact(n_max + 1);
  sqrt_fact[0] = 1.0;
  for (int k = 1; k <= n_max; ++k) sqrt_fact[k] = sqrt_fact[k - 1] * std::sqrt(double(k));

  // Power tables of the four matrix entries up to n_max.
  auto powers = [&](Complex z) {
    std::vector<Complex> p(n_max + 1);
    p[0] = 1.0;
    for (int k = 1; k <= n_max; ++k) p[k] = p[k - 1] * z;
    return p;
  };
  const auto p11 = powers(u(0, 0)), p21 = powers(u(1, 0));
  const auto p12 = powers(u(0, 1)), p22 = powers(u(1, 1));

  for (int s = 0; s <= n_max; ++s) {
    const int off = sector_offset(s);
    for (int m = 0; m <= s; ++m) {          // source |m, s-m>
      for (int p = 0; p <= s; ++p) {        // image |p, s-p>
        Complex acc = 0.0;
        const int k_lo = std::max(0, p - (s - m)), k_hi = std::min(m, p);
        for (int k = k_lo; k <= k_hi; ++k) {
          const int l = p - k;
          acc += binomial(m, k) * binomial(s - m, l) * p11[k] * p21[m - k] * p12[l] * p22[s - m - l];
        }
        const double scale = (sqrt_fact[p] * sqrt_fact[s - p]) / (sqrt_fact[m] * sqrt_fact[s - m]);
        lift(off + p, off + m) = acc * scale;
      }
    }
  }
  return lift;
}

TwoModeState apply_su2(const TwoModeState& state, const SU2Params& params) {
  const ComplexMatrix lift = su2_lift(su2_matrix(params), state.n_max);
  ComplexMatrix out = lift * state.matrix * lift.adjoint();
  out = ((out + out.adjoint()) / 2.0).eval();
  return TwoModeState{state.n_max, std::move(out)};
}

TwoModeState apply_loss(const TwoModeState& state, double eta) {
  if (eta < 0.0 || eta > 1.0)
    fail_input("eta-out-of-range", "eta must lie in [0, 1], got " + std::to_string(eta));
  const int n_max = state.n_max;
  const int d = dimension(n_max);

  // K(m, j) = sqrt(C(m+j, j) eta^m (1-eta)^j): amplitude for keeping m photons
  // while j leak to the environment.
  RealMatrix kraus(n_max + 1, n_max + 1);
  for (int m = 0; m <= n_max; ++m)
    for (int j = 0; m + j <= n_max; ++j)
      kraus(m, j) = std::sqrt(binomial(m + j, j) * std::pow(eta, m) * std::pow(1.0 - eta, j));

  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  for (int p = 0; p <= n_max; ++p)
    for (int q = 0; p + q <= n_max; ++q)
      for (int r = 0; r <= n_max; ++r)
        for (int t = 0; r + t <= n_max; ++t) {
          const Complex v = state.matrix(basis_index(p, q), basis_index(r, t));
          if (v == Complex(0.0, 0.0)) continue;
          for (int j = 0; j <= std::min(p, r); ++j)
            for (int l = 0; l <= std::min(q, t); ++l)
              out(basis_index(p - j, q - l), basis_index(r - j, t - l)) +=
                  kraus(p - j, j) * kraus(r - j, j) * kraus(q - l, l) * kraus(t - l, l) * v;
        }
  out = ((out + out.adjoint()) / 2.0).eval();
  return TwoModeState{n_max, std::move(out)};
}

SectorProjection sector_project(const TwoModeState& state, int n_photons) {
  if (n_photons < 0 || n_photons > state.n_max)
    fail_input("dimension-mismatch", "sector " + std::to_string(n_photons) + " outside the truncated basis");
  const int off = sector_offset(n_photons);
  ComplexMatrix block = state.matrix.block(off, off, n_photons + 1, n_photons + 1);
  const double weight = block.trace().real();
  if (weight < 1e-15)
    return SectorProjection{SectorMatrix{n_photons, ComplexMatrix::Zero(n_photons + 1, n_photons + 1), false},
                            weight, true};
  return SectorProjection{SectorMatrix{n_photons, block / weight, true}, weight, false};
}

double factorial_moment_mode1(const TwoModeState& state, int n_photons) {
  if (n_photons < 0) fail_input("invalid-config", "moment order must be nonnegative");
  double acc = 0.0;
  for (int m = n_photons; m <= state.n_max; ++m) {
    double falling = 1.0;
    for (int k = 0; k < n_photons; ++k) falling *= double(m - k);
    for (int n = 0; m + n <= state.n_max; ++n) acc += falling * state.population(m, n);
  }
  return acc;
}

double detection_probability_mode1(const TwoModeState& state, int n_photons, double eta) {
  if (eta < 0.0 || eta > 1.0)
    fail_input("eta-out-of-range", "eta must lie in [0, 1], got " + std::to_string(eta));
  if (n_photons < 0) fail_input("invalid-config", "detected photon number must be nonnegative");
  // |m,n> fires iff exactly n_photons of the m photons in mode 1 survive and
  // every mode-2 photon is lost. At eta = 1 only the n_photons-sector
  // contributes, so a lossless run measures that sector alone; states confined
  // to the sector have n = 0 in every contributing term, making the veto
  // factor exactly 1 for them at any eta.
  const double loss = 1.0 - eta;
  double acc = 0.0;
  for (int m = n_photons; m <= state.n_max; ++m) {
    const double keep = binomial(m, n_photons) * std::pow(eta, n_photons) *
                        std::pow(loss, m - n_photons);
    if (keep == 0.0) continue;
    for (int n = 0; m + n <= state.n_max; ++n) {
      acc += state.population(m, n) * keep * std::pow(loss, n);
    }
  }
  return acc;
}

TwoModeState embed_sector(const SectorMatrix& sector, int n_max) {
  if (sector.n_photons > n_max)
    fail_input("dimension-mismatch", "sector does not fit in the truncated basis");
  const int d = dimension(n_max);
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  const int off = sector_offset(sector.n_photons);
  out.block(off, off, sector.dim(), sector.dim()) = sector.matrix;
  return TwoModeState{n_max, std::move(out)};
}

}  // namespace noontomo::fock
