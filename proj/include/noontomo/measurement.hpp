#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "noontomo/fock.hpp"

// Measurement settings and the linear model connecting Nth-order coherences to
// N-fold count rates.
namespace noontomo::measurement {

struct AngleSet {
  int n_photons = 0;
  std::vector<fock::SU2Params> settings;  // length (N+1)^2

  int size() const { return int(settings.size()); }
};

// Row k maps the flattened coherence matrix (row-major, column m*(N+1)+n) to
// the Nth factorial moment of mode 1 at setting k. Numeric rank must be
// (N+1)^2 (singular values above 1e-9 of the largest).
struct DesignMatrix {
  int n_photons = 0;
  ComplexMatrix entries;
};

// One simulated or measured tomography data set.
struct CountRecord {
  int n_photons = 0;
  AngleSet settings;
  std::vector<long long> counts;
  long long pulses = 0;
  double eta = 1.0;
  nlohmann::json metadata;  // free-form provenance, optional
};

// Tomographically complete settings for N in [1, 6]. N in [2, 5] uses the
// tabulated angle grids (exact rational multiples of pi rendered at call
// time); odd N carries the (-pi/4, 0) pair exactly once, appended last.
AngleSet angle_set(int n_photons);

// Coefficient of coherence (m, n) in the setting's moment:
//   (-1)^(m-n)/2^N C(N,n) C(N,m) (cos t - sin t)^(n+m) (cos t + sin t)^(2N-n-m) e^(i phi (m-n)).
Complex design_coeff(int n_photons, int m, int n, const fock::SU2Params& params);

// Stacked design rows for the given settings; validates the rank invariant.
DesignMatrix design_matrix(int n_photons, const AngleSet& angles);

// Expected N-fold counts per setting: pulses times the probability of an
// N-photon event (exactly N detected in mode 1, none in mode 2) after the
// setting's mode transformation, both ports at transmission eta. For a state
// confined to the N-photon sector this equals eta^N/N! times the mode-1
// factorial moment at every eta, and at eta = 1 it matches the design-matrix
// model exactly for any state.
RealVector expected_counts(const fock::TwoModeState& state, const AngleSet& angles,
                           double pulses, double eta);

// Independent Poisson draws around the expected counts; deterministic for a
// fixed seed.
std::vector<long long> sample_counts(const RealVector& expected, std::uint64_t seed);

nlohmann::json to_json(const CountRecord& record);
CountRecord count_record_from_json(const nlohmann::json& j);

}  // namespace noontomo::measurement
