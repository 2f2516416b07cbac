#pragma once

#include <utility>
#include <vector>

#include "noontomo/measurement.hpp"

// Density-matrix reconstruction. The solver works on the coherence matrix
// rho_{mn} = sigma_{mn} sqrt(m!(N-m)! n!(N-n)!), a congruence of the sector
// matrix by a positive diagonal, so positive semidefiniteness is equivalent in
// both spaces.
namespace noontomo::tomography {

struct CoherenceMatrix {
  int n_photons = 0;
  ComplexMatrix matrix;

  int dim() const { return n_photons + 1; }
};

struct SolverOptions {
  int max_iterations = 50000;
  double kkt_tol = 1e-9;        // projected-gradient fixed-point residual target
  double rel_obj_tol = 1e-10;   // alternative gate: relative decrease over the window
  int rel_obj_window = 50;
};

struct SolverReport {
  double objective = 0.0;       // weighted squared-residual value at the optimum, raw count units
  int iterations = 0;
  bool converged = false;       // implies kkt_residual < 1e-8
  double kkt_residual = 0.0;    // evaluated on the internally rescaled problem
};

CoherenceMatrix coherence_from_fock(const fock::SectorMatrix& sector);

// Inverse congruence. With normalize set the result is scaled to unit trace
// (zero-trace error if there is nothing to normalize).
fock::SectorMatrix fock_from_coherence(const CoherenceMatrix& coherences, bool normalize);

// Direct solve of (design) x = counts, Hermitized. Fast, but noisy counts may
// produce an indefinite matrix.
CoherenceMatrix linear_invert(const measurement::DesignMatrix& design, const RealVector& counts);

// Sum over settings of (model_k - counts_k)^2 / max(counts_k, 1), where
// model_k is the design row applied to the coherences of the (unnormalized)
// estimate. Convex in the estimate.
double likelihood_value(const fock::SectorMatrix& estimate, const measurement::DesignMatrix& design,
                        const RealVector& counts);

// Accelerated projected-gradient minimization of the likelihood over PSD
// coherence matrices (no trace constraint; the result is normalized after).
// Deterministic. A failed convergence is reported, not thrown.
std::pair<fock::SectorMatrix, SolverReport> ml_reconstruct(const measurement::DesignMatrix& design,
                                                           const RealVector& counts,
                                                           const SolverOptions& options = {});

inline RealVector to_real_vector(const std::vector<long long>& counts) {
  RealVector v(counts.size());
  for (size_t i = 0; i < counts.size(); ++i) v(Eigen::Index(i)) = double(counts[i]);
  return v;
}

}  // namespace noontomo::tomography
