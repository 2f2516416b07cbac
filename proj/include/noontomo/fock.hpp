#pragma once

#include <cstdint>

#include "noontomo/types.hpp"

// Truncated two-mode Fock space. Basis states |m,n> with m+n <= n_max are
// ordered lexicographically in (m+n, m), so every fixed-total-photon-number
// sector is a contiguous index range and sector extraction is a block read.
namespace noontomo::fock {

inline int dimension(int n_max) { return (n_max + 1) * (n_max + 2) / 2; }
inline int sector_offset(int total) { return total * (total + 1) / 2; }
inline int basis_index(int m, int n) { return sector_offset(m + n) + m; }

// Mixed state on the truncated basis. Hermitian, PSD, trace in
// [1 - trace_slack, 1 + 1e-12]: truncation may only remove mass.
struct TwoModeState {
  int n_max = 0;
  ComplexMatrix matrix;

  static constexpr double trace_slack = 1e-5;

  int dim() const { return dimension(n_max); }
  double trace() const { return matrix.trace().real(); }
  double population(int m, int n) const { return matrix(basis_index(m, n), basis_index(m, n)).real(); }

  // Full invariant check (Hermiticity, trace window, PSD); throws on failure.
  void validate() const;
};

// Measurement-setting parameters of the two-mode transformation
//   U(theta, phi) = R(theta) * B * P(phi),
// R a rotation by theta, B the symmetric 50/50 mixer, P = diag(e^{-i phi/2}, e^{+i phi/2}).
// Angles in radians, never range-reduced. (theta = -pi/4, phi = 0) is the identity.
struct SU2Params {
  double theta = 0.0;
  double phi = 0.0;
};

// N-photon sector density matrix, indexed by m = photons in mode 1, m in 0..N.
struct SectorMatrix {
  int n_photons = 0;
  ComplexMatrix matrix;
  bool normalized = false;

  int dim() const { return n_photons + 1; }
};

struct SectorProjection {
  SectorMatrix sector;   // normalized when weight is above the empty threshold
  double weight = 0.0;   // trace mass found in the sector
  bool empty = false;    // weight below 1e-15: sector content is undefined
};

// Coherent state amplitudes on |0..n_max>, renormalized over the truncated
// basis. Truncated tail mass must be < 1e-6 (cutoff-too-small otherwise).
ComplexVector coherent_state(Complex alpha, int n_max);

// Squeezed-vacuum amplitudes on |0..n_max>: even occupations only, amplitude
// at |2n> proportional to eps^n sqrt((2n)!)/(2^n n!), eps = tanh r in [0, 1).
// Renormalized over the truncated basis; tail mass must be < 1e-6.
ComplexVector spdc_state(double epsilon, int n_max);

// Pure product state |mode1> x |mode2> truncated to m+n <= n_max. The dropped
// cross mass stays within TwoModeState::trace_slack.
TwoModeState pure_product(const ComplexVector& mode1, const ComplexVector& mode2, int n_max);

Eigen::Matrix2cd su2_matrix(const SU2Params& params);

// Fock-space lift of a 2x2 unitary u (creation operators transform by the
// columns of u), block-diagonal over photon-number sectors.
ComplexMatrix su2_lift(const Eigen::Matrix2cd& u, int n_max);

// State after the mode transformation U(theta, phi). Photon-number conserving,
// exactly unitary on the truncated basis.
TwoModeState apply_su2(const TwoModeState& state, const SU2Params& params);

// Equal-transmission loss channel on both modes (beam splitter to an
// unobserved environment). Trace preserving and completely positive;
// apply_loss(., eta1) then apply_loss(., eta2) equals apply_loss(., eta1*eta2).
TwoModeState apply_loss(const TwoModeState& state, double eta);

// Normalized N-photon block and its weight; empty result below weight 1e-15.
SectorProjection sector_project(const TwoModeState& state, int n_photons);

// Nth factorial moment of mode 1: sum over the basis of
// population(m, n) * m!/(m-N)! for m >= N. Exact on the truncated basis.
double factorial_moment_mode1(const TwoModeState& state, int n_photons);

// Probability of an N-photon event at transmission eta: exactly N photons
// detected in mode 1 and none in mode 2, with number-resolved detection on
// both ports. sum_{m,n} P(m,n) C(m,N) eta^N (1-eta)^(m-N+n). At eta = 1 this
// is the population of (N photons in mode 1, none in mode 2); for a state
// confined to the N-photon sector it reduces to eta^N P(N, 0) at every eta.
double detection_probability_mode1(const TwoModeState& state, int n_photons, double eta);

// Embed a sector matrix as a TwoModeState supported on that sector alone.
TwoModeState embed_sector(const SectorMatrix& sector, int n_max);

double binomial(int n, int k);

}  // namespace noontomo::fock
