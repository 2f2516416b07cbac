#include "noontomo/measurement.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace noontomo::measurement {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRankTolerance = 1e-9;

struct PiFraction {
  int num, den;
  double value() const { return double(num) * kPi / double(den); }
};

// Tabulated grids for N in [2, 5]. Footnote pair (-pi/4, 0) for odd N.
// The N=4 theta row includes 0; without it the grid has only 20 settings and
// cannot reach rank 25.
const std::vector<PiFraction>& table_thetas(int n) {
  static const std::vector<std::vector<PiFraction>> t = {
      {{-1, 3}, {0, 1}, {1, 3}},
      {{-7, 18}, {0, 1}, {7, 18}},
      {{-13, 30}, {-3, 20}, {0, 1}, {3, 20}, {13, 30}},
      {{-13, 30}, {-2, 15}, {0, 1}, {2, 15}, {13, 30}}};
  return t[n - 2];
}

const std::vector<PiFraction>& table_phis(int n) {
  static const std::vector<std::vector<PiFraction>> t = {
      {{0, 1}, {2, 3}, {4, 3}},
      {{1, 5}, {3, 5}, {1, 1}, {7, 5}, {9, 5}},
      {{1, 5}, {3, 5}, {1, 1}, {7, 5}, {9, 5}},
      {{2, 7}, {4, 7}, {6, 7}, {8, 7}, {10, 7}, {12, 7}, {2, 1}}};
  return t[n - 2];
}

// Settings for N outside the tabulated range: symmetric Chebyshev-node theta
// grid against a uniform phase grid, mirroring the tabulated structure
// (odd N: N thetas, N+2 phis at odd multiples, plus the identity pair).
AngleSet generated_set(int n) {
  AngleSet set;
  set.n_photons = n;
  const bool odd = (n % 2 != 0);
  const int n_theta = odd ? n : n + 1;
  const int n_phi = odd ? n + 2 : n + 1;
  const double theta_max = 13.0 * kPi / 30.0;
  for (int i = 0; i < n_theta; ++i) {
    const double theta =
        (n_theta == 1) ? 0.0 : -theta_max * std::cos(kPi * (2 * i + 1) / (2.0 * n_theta));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = odd ? (2 * j + 1) * kPi / n_phi : 2.0 * kPi * j / n_phi;
      set.settings.push_back({theta, phi});
    }
  }
  if (odd) set.settings.push_back({-kPi / 4.0, 0.0});
  return set;
}

}  // namespace

AngleSet angle_set(int n_photons) {
  if (n_photons < 1 || n_photons > 6)
    fail_input("unsupported-N", "settings are defined for N in [1, 6], got " + std::to_string(n_photons));
  if (n_photons < 2 || n_photons > 5) return generated_set(n_photons);
  AngleSet set;
  set.n_photons = n_photons;
  for (const auto& t : table_thetas(n_photons))
    for (const auto& p : table_phis(n_photons)) set.settings.push_back({t.value(), p.value()});
  if (n_photons % 2 != 0) set.settings.push_back({-kPi / 4.0, 0.0});
  return set;
}

Complex design_coeff(int n_photons, int m, int n, const fock::SU2Params& params) {
  if (m < 0 || n < 0 || m > n_photons || n > n_photons)
    fail_input("dimension-mismatch", "coherence index outside [0, N]");
  const double c = std::cos(params.theta), s = std::sin(params.theta);
  const double sign = ((m - n) % 2 == 0) ? 1.0 : -1.0;
  const double magnitude = sign / std::pow(2.0, n_photons) * fock::binomial(n_photons, n) *
                           fock::binomial(n_photons, m) * std::pow(c - s, n + m) *
                           std::pow(c + s, 2 * n_photons - n - m);
  return magnitude * std::polar(1.0, params.phi * double(m - n));
}

DesignMatrix design_matrix(int n_photons, const AngleSet& angles) {
  if (angles.n_photons != n_photons)
    fail_input("dimension-mismatch", "angle set is for a different photon number");
  const int d = n_photons + 1;
  if (angles.size() != d * d)
    fail_input("dimension-mismatch", "expected " + std::to_string(d * d) + " settings, got " +
                                         std::to_string(angles.size()));
  ComplexMatrix entries(d * d, d * d);
  for (int k = 0; k < angles.size(); ++k)
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n)
        entries(k, m * d + n) = design_coeff(n_photons, m, n, angles.settings[k]);

  const Eigen::JacobiSVD<ComplexMatrix> svd(entries);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= kRankTolerance * sv(0))
    fail_numerical("rank-deficient-design",
                   "design matrix rank below " + std::to_string(d * d) +
                       " (singular value ratio " + std::to_string(sv(sv.size() - 1) / sv(0)) + ")");
  return DesignMatrix{n_photons, std::move(entries)};
}

RealVector expected_counts(const fock::TwoModeState& state, const AngleSet& angles,
                           double pulses, double eta) {
  if (pulses < 0.0) fail_input("invalid-config", "pulses must be nonnegative");
  if (eta < 0.0 || eta > 1.0)
    fail_input("eta-out-of-range", "eta must lie in [0, 1], got " + std::to_string(eta));
  RealVector counts(angles.size());
  for (int k = 0; k < angles.size(); ++k) {
    const fock::TwoModeState rotated = fock::apply_su2(state, angles.settings[k]);
    double value = pulses * fock::detection_probability_mode1(rotated, angles.n_photons, eta);
    // An exactly dark setting can come out at -eps from rotation roundoff.
    if (value < -1e-9 * std::max(pulses, 1.0))
      fail_numerical("non-PSD", "expected count " + std::to_string(value) + " at setting " +
                                    std::to_string(k));
    counts(k) = std::max(value, 0.0);
  }
  return counts;
}

std::vector<long long> sample_counts(const RealVector& expected, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<long long> counts(expected.size());
  for (Eigen::Index k = 0; k < expected.size(); ++k) {
    if (!(expected(k) >= 0.0))
      fail_input("invalid-config", "expected counts must be nonnegative");
    if (expected(k) <= 0.0) {
      counts[k] = 0;
      continue;
    }
    std::poisson_distribution<long long> dist(expected(k));
    counts[k] = dist(rng);
  }
  return counts;
}

nlohmann::json to_json(const CountRecord& record) {
  nlohmann::json settings = nlohmann::json::array();
  for (const auto& s : record.settings.settings)
    settings.push_back({{"theta", s.theta}, {"phi", s.phi}});
  nlohmann::json j{{"n_photons", record.n_photons},
                   {"settings", std::move(settings)},
                   {"counts", record.counts},
                   {"pulses", record.pulses},
                   {"eta", record.eta}};
  if (!record.metadata.is_null() && !record.metadata.empty()) j["metadata"] = record.metadata;
  return j;
}

CountRecord count_record_from_json(const nlohmann::json& j) {
  const auto require = [&](const char* key) {
    if (!j.contains(key)) fail_input("schema-invalid-input", std::string("missing field '") + key + "'");
  };
  for (const char* key : {"n_photons", "settings", "counts", "pulses", "eta"}) require(key);
  CountRecord record;
  try {
    record.n_photons = j.at("n_photons").get<int>();
    record.pulses = j.at("pulses").get<long long>();
    record.eta = j.at("eta").get<double>();
    if (!j.at("settings").is_array() || !j.at("counts").is_array())
      fail_input("schema-invalid-input", "'settings' and 'counts' must be arrays");
    for (const auto& s : j.at("settings"))
      record.settings.settings.push_back({s.at("theta").get<double>(), s.at("phi").get<double>()});
    record.counts = j.at("counts").get<std::vector<long long>>();
    if (j.contains("metadata")) record.metadata = j.at("metadata");
  } catch (const nlohmann::json::exception& e) {
    fail_input("schema-invalid-input", e.what());
  }
  record.settings.n_photons = record.n_photons;
  if (record.n_photons < 1) fail_input("schema-invalid-input", "n_photons must be positive");
  if (record.counts.size() != record.settings.settings.size())
    fail_input("schema-invalid-input", "counts and settings lengths differ");
  for (long long c : record.counts)
    if (c < 0) fail_input("schema-invalid-input", "counts must be nonnegative");
  if (record.pulses <= 0) fail_input("schema-invalid-input", "pulses must be positive");
  if (record.eta < 0.0 || record.eta > 1.0) fail_input("schema-invalid-input", "eta must lie in [0, 1]");
  return record;
}

}  // namespace noontomo::measurement
