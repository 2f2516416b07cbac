#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "noontomo/fock.hpp"
#include "noontomo/measurement.hpp"
#include "noontomo/tomography.hpp"
#include "noontomo/types.hpp"

namespace noontomo::analysis {

// Uhlmann fidelity F(rho, sigma) = (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
// Inputs are normalized by trace before comparison; the result is clipped
// to [0, 1] after a tolerance check on the raw value.
double fidelity(const ComplexMatrix& rho, const ComplexMatrix& sigma);
double fidelity(const fock::SectorMatrix& a, const fock::SectorMatrix& b);

// Interference fringe scan: detected counts versus analysis phase, together
// with the separately measured single-source count levels used to normalize
// the fringe amplitude into an overlap.
struct FringeData {
  std::vector<double> phases;  // radians
  std::vector<double> counts;
  double background_u = 0.0;
  double background_v = 0.0;
};

// Least-squares fit of counts(phi) = offset + amplitude cos(2 phi - phase).
struct OverlapFit {
  double overlap = 0.0;   // amplitude / (2 sqrt(U V)), clipped to [0, 1]
  double ci95 = 0.0;      // 1.96 sigma_amplitude / (2 sqrt(U V))
  double amplitude = 0.0;
  double sigma_amplitude = 0.0;
  double offset = 0.0;
  double phase = 0.0;     // radians
  bool clipped = false;   // raw overlap exceeded 1 before clipping

  double evaluate(double phi) const {
    return offset + amplitude * std::cos(2.0 * phi - phase);
  }
};

// Weighted linear fit in the basis {1, cos 2phi, sin 2phi} with Poisson
// weights 1 / max(count, 1). Needs at least five points and backgrounds > 0.
OverlapFit fit_overlap(const FringeData& data);

struct BootstrapOptions {
  int trials = 100;
  uint64_t seed = 0;
  int jobs = 1;
};

struct BootstrapSummary {
  double mean = 0.0;
  double sigma = 0.0;
  int failures = 0;
  int trials = 0;
};

// Parametric bootstrap of the reconstruction fidelity against a fixed
// target: counts are resampled as independent Poisson draws around the
// observed values and each replicate is reconstructed from scratch.
// Trial seeds are derived deterministically from options.seed, so results
// do not depend on the number of worker threads.
BootstrapSummary bootstrap_fidelity(const measurement::DesignMatrix& design,
                                    const std::vector<long long>& counts,
                                    const fock::SectorMatrix& target,
                                    const BootstrapOptions& options);

// Same, but with one explicit seed per trial.
BootstrapSummary bootstrap_fidelity(const measurement::DesignMatrix& design,
                                    const std::vector<long long>& counts,
                                    const fock::SectorMatrix& target,
                                    const std::vector<uint64_t>& trial_seeds,
                                    int jobs = 1);

struct SweepConfig {
  int n_photons = 2;
  double gamma = 1.0;
  double phi_cs = 0.0;
  double epsilon = 0.05;
  std::vector<double> etas;
  double pulses = 0.0;    // 0: reconstruct from noiseless expected counts
  uint64_t seed = 0;
  int n_max = 0;          // 0: default cutoff for n_photons
  int mc_trials = 0;      // 0: no error bars
  int jobs = 1;
};

struct SweepResult {
  std::vector<double> etas;
  std::vector<double> fidelities;
  std::vector<double> sigmas;
};

// Reconstruction fidelity to `target` as a function of the transmission
// applied identically to both modes. The source state is prepared once;
// loss enters through the detection model at each grid point.
SweepResult transmission_sweep(const SweepConfig& config,
                               const fock::SectorMatrix& target);

// Number formatting shared by every CSV writer: 9 significant digits.
std::string csv_number(double value);

// Long-format sweep table: header "n,eta,fidelity,sigma".
std::string sweep_to_csv(const SweepResult& result, int n_photons);

// Parse a "phase,counts" table (optional header line) into a fringe scan.
FringeData fringe_from_csv(const std::string& text, double background_u,
                           double background_v);

// Observed points next to the fitted curve: "phase,counts,fit".
std::string fringe_fit_csv(const FringeData& data, const OverlapFit& fit);

}  // namespace noontomo::analysis
