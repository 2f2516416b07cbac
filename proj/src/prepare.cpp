#include "noontomo/prepare.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

namespace noontomo::prepare {

namespace {

constexpr double kNominalEpsilon = 0.01;  // sector content is epsilon-free; any small value works

void check_source(const SourceParams& p) {
  if (p.gamma < 0.0) fail_input("invalid-config", "gamma must be nonnegative");
  if (p.epsilon < 0.0 || p.epsilon >= 1.0)
    fail_input("epsilon-out-of-range", "epsilon must lie in [0, 1), got " + std::to_string(p.epsilon));
  if (p.n_max < 1) fail_input("invalid-config", "n_max must be at least 1");
}

// Unnormalized N-photon sector amplitudes in the source (H/V) basis:
// m photons from the squeezed source, N-m from the coherent one.
ComplexVector sector_amplitudes_hv(int n_photons, double gamma, double phi_cs) {
  ComplexVector w = ComplexVector::Zero(n_photons + 1);
  const Complex phase = std::polar(1.0, phi_cs + std::numbers::pi / 2.0);
  for (int m = 0; m <= n_photons; ++m) {
    if (m % 2 != 0) continue;
    double squeezed = 1.0;  // sqrt(m!) / (2^{m/2} (m/2)!), epsilon power dropped
    for (int j = 1; 2 * j <= m; ++j) squeezed *= std::sqrt(double(2 * j - 1) / double(2 * j));
    const int k = n_photons - m;
    double coherent = std::pow(gamma, 0.5 * k);
    for (int i = 1; i <= k; ++i) coherent /= std::sqrt(double(i));
    w(m) = squeezed * coherent * std::pow(phase, k);
  }
  return w;
}

// Sector block of the preparation rotation U(-pi/2, 0).
const ComplexMatrix& rotation_block(int n_photons) {
  static std::vector<ComplexMatrix> cache;
  while (int(cache.size()) <= n_photons) {
    const int s = int(cache.size());
    const ComplexMatrix lift =
        fock::su2_lift(fock::su2_matrix({-std::numbers::pi / 2.0, 0.0}), s);
    cache.push_back(lift.block(fock::sector_offset(s), fock::sector_offset(s), s + 1, s + 1));
  }
  return cache[n_photons];
}

// Lossless sector fidelity to ideal_noon without building the full state.
double sector_noon_fidelity(int n_photons, double gamma, double phi_cs) {
  const ComplexVector v = rotation_block(n_photons) * sector_amplitudes_hv(n_photons, gamma, phi_cs);
  const double norm2 = v.squaredNorm();
  if (norm2 < 1e-300) return 0.0;
  const Complex overlap = (v(n_photons) + v(0)) / std::sqrt(2.0);
  return std::norm(overlap) / norm2;
}

}  // namespace

fock::TwoModeState prepared_state(const SourceParams& params) {
  check_source(params);
  const Complex alpha = std::sqrt(params.gamma * params.epsilon) *
                        std::polar(1.0, params.phi_cs + std::numbers::pi / 2.0);
  const ComplexVector squeezed = fock::spdc_state(params.epsilon, params.n_max);
  const ComplexVector coherent = fock::coherent_state(alpha, params.n_max);
  const fock::TwoModeState product = fock::pure_product(squeezed, coherent, params.n_max);
  return fock::apply_su2(product, {-std::numbers::pi / 2.0, 0.0});
}

fock::SectorMatrix ideal_noon(int n_photons) {
  if (n_photons < 1) fail_input("unsupported-N", "NOON order must be at least 1");
  ComplexMatrix m = ComplexMatrix::Zero(n_photons + 1, n_photons + 1);
  m(0, 0) = m(0, n_photons) = m(n_photons, 0) = m(n_photons, n_photons) = 0.5;
  return fock::SectorMatrix{n_photons, std::move(m), true};
}

fock::SectorMatrix ideal_cph(int n_photons, double gamma, double phi_cs) {
  if (n_photons < 1) fail_input("unsupported-N", "sector order must be at least 1");
  if (gamma <= 0.0) fail_input("invalid-config", "gamma must be positive for a hole state");
  SourceParams params;
  params.gamma = gamma;
  params.epsilon = kNominalEpsilon;
  params.phi_cs = phi_cs;
  params.n_max = default_n_max(n_photons);
  const fock::SectorProjection proj = sector_project(prepared_state(params), n_photons);
  if (proj.empty) fail_numerical("empty-sector", "prepared state has no N-photon component");
  return proj.sector;
}

GammaOptimum optimal_gamma(int n_photons) {
  if (n_photons < 1) fail_input("unsupported-N", "NOON order must be at least 1");
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  constexpr double kGammaLo = 1e-4, kGammaHi = 50.0;

  const auto objective = [&](double g, double p) { return sector_noon_fidelity(n_photons, g, p); };

  // Coarse scan: log-spaced gamma against a uniform phase grid.
  const int n_phi = 512, n_gamma = 160;
  double best_f = -1.0, best_g = 1.0, best_p = 0.0;
  for (int i = 0; i < n_phi; ++i) {
    const double p = kTwoPi * i / n_phi;
    for (int j = 0; j < n_gamma; ++j) {
      const double g = kGammaLo * std::pow(kGammaHi / kGammaLo, double(j) / (n_gamma - 1));
      const double f = objective(g, p);
      if (f > best_f) { best_f = f; best_g = g; best_p = p; }
    }
  }

  // Golden-section refinement, alternating the two coordinates.
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  const auto refine = [&](double lo, double hi, const auto& f1d) {
    double a = lo, b = hi;
    double x1 = b - golden * (b - a), x2 = a + golden * (b - a);
    double f1 = f1d(x1), f2 = f1d(x2);
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) {
        a = x1; x1 = x2; f1 = f2;
        x2 = a + golden * (b - a); f2 = f1d(x2);
      } else {
        b = x2; x2 = x1; f2 = f1;
        x1 = b - golden * (b - a); f1 = f1d(x1);
      }
    }
    return (f1 > f2) ? x1 : x2;
  };

  const double g_step = std::pow(kGammaHi / kGammaLo, 1.0 / (n_gamma - 1));
  const double p_step = kTwoPi / n_phi;
  for (int round = 0; round < 3; ++round) {
    best_g = std::exp(refine(std::log(std::max(kGammaLo, best_g / g_step)),
                             std::log(std::min(kGammaHi, best_g * g_step)),
                             [&](double x) { return objective(std::exp(x), best_p); }));
    best_p = refine(best_p - p_step, best_p + p_step,
                    [&](double x) { return objective(best_g, x); });
  }
  best_p = std::fmod(best_p + kTwoPi, kTwoPi);
  return GammaOptimum{best_g, best_p, objective(best_g, best_p)};
}

int default_n_max(int n_photons) {
  if (const char* env = std::getenv("NOONTOMO_NMAX")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < n_photons || v > 64)
      fail_input("invalid-config", "NOONTOMO_NMAX must be an integer in [N, 64]");
    return int(v);
  }
  return n_photons + 6;
}

}  // namespace noontomo::prepare
