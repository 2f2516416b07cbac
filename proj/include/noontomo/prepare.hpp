#pragma once

#include "noontomo/fock.hpp"

// State preparation: a squeezed-vacuum source (mode 1, H) and a coherent
// source (mode 2, V) combined on a 45-degree polarization rotation into the
// interferometer modes. Loss is never applied here; callers attach it so
// lossless targets stay extractable.
namespace noontomo::prepare {

struct SourceParams {
  double gamma = 1.0;    // |alpha|^2 / epsilon, pair-amplitude ratio, >= 0
  double epsilon = 0.05; // squeezing amplitude, in [0, 1)
  double phi_cs = 0.0;   // coherent-source phase, radians
  double eta = 1.0;      // downstream transmission; carried, not applied here
  int n_max = 8;         // truncation cutoff
};

// Lossless pure input state. The coherent amplitude is
// alpha = sqrt(gamma * epsilon) * exp(i (phi_cs + pi/2)); the offset fixes the
// pair phase so that gamma = 3, phi_cs = pi yields the photon-hole state.
fock::TwoModeState prepared_state(const SourceParams& params);

// (|N,0> + |0,N>)/sqrt(2) as a normalized N-photon sector matrix.
fock::SectorMatrix ideal_noon(int n_photons);

// Lossless N-photon sector of prepared_state at (gamma, phi_cs). The
// normalized sector is exactly epsilon-independent, so a nominal internal
// epsilon is used. At n_photons = 3, gamma = 3, phi_cs = pi the populations of
// |3,0> and |0,3> vanish.
fock::SectorMatrix ideal_cph(int n_photons, double gamma, double phi_cs);

struct GammaOptimum {
  double gamma = 0.0;
  double phi_cs = 0.0;
  double fidelity = 0.0;
};

// Deterministic grid plus golden-section search of the lossless N-photon
// sector fidelity to ideal_noon over gamma in (0, 50], phi_cs in [0, 2pi).
GammaOptimum optimal_gamma(int n_photons);

// Default truncation cutoff for an N-photon run.
int default_n_max(int n_photons);

}  // namespace noontomo::prepare
