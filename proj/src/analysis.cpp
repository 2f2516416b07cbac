#include "noontomo/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <limits>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "noontomo/prepare.hpp"

namespace noontomo::analysis {

namespace {

constexpr double kFidelitySlack = 1e-8;
constexpr double kPsdTolerance = -1e-8;

// splitmix64 finalizer; full avalanche, so consecutive counters give
// statistically independent streams.
uint64_t mix_seed(uint64_t seed, uint64_t counter) {
  uint64_t z = seed + (counter + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ComplexMatrix matrix_sqrt_psd(const ComplexMatrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(m);
  const RealVector& vals = eig.eigenvalues();
  double top = std::max(vals.maxCoeff(), 0.0);
  if (vals.minCoeff() < kPsdTolerance * std::max(top, 1.0)) {
    fail_numerical("non-PSD", std::string(what) + " has a negative eigenvalue " +
                                  std::to_string(vals.minCoeff()));
  }
  RealVector roots = vals.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() *
         eig.eigenvectors().adjoint();
}

ComplexMatrix normalized_state(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    fail_input("dimension-mismatch", std::string(what) + " is not square");
  }
  ComplexMatrix h = 0.5 * (m + m.adjoint());
  double tr = h.trace().real();
  if (tr <= 1e-14) {
    fail_numerical("zero-trace", std::string(what) + " has trace " +
                                     std::to_string(tr));
  }
  return h / tr;
}

// Runs fn(0..total-1), splitting indices over up to `jobs` threads. The
// work per index must not depend on scheduling; the first exception wins.
void run_indexed(int total, int jobs, const std::function<void(int)>& fn) {
  int workers = std::min(std::max(jobs, 1), total);
  if (workers <= 1) {
    for (int i = 0; i < total; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= total) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

BootstrapSummary summarize_trials(const std::vector<double>& fids,
                                  const std::vector<char>& failed) {
  BootstrapSummary out;
  out.trials = static_cast<int>(fids.size());
  std::vector<double> kept;
  kept.reserve(fids.size());
  for (size_t t = 0; t < fids.size(); ++t) {
    if (failed[t]) {
      ++out.failures;
    } else {
      kept.push_back(fids[t]);
    }
  }
  if (kept.empty() || out.failures * 10 > out.trials) {
    fail_numerical("solver-failure",
                   std::to_string(out.failures) + " of " +
                       std::to_string(out.trials) + " bootstrap trials failed");
  }
  double mean = 0.0;
  for (double f : kept) mean += f;
  mean /= static_cast<double>(kept.size());
  double var = 0.0;
  for (double f : kept) var += (f - mean) * (f - mean);
  if (kept.size() > 1) var /= static_cast<double>(kept.size() - 1);
  out.mean = mean;
  out.sigma = std::sqrt(std::max(var, 0.0));
  return out;
}

}  // namespace

double fidelity(const ComplexMatrix& rho, const ComplexMatrix& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) {
    fail_input("dimension-mismatch",
               "fidelity arguments have different shapes");
  }
  ComplexMatrix a = normalized_state(rho, "first state");
  ComplexMatrix b = normalized_state(sigma, "second state");
  ComplexMatrix root = matrix_sqrt_psd(a, "first state");
  ComplexMatrix inner = root * b * root;
  inner = 0.5 * (inner + inner.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(inner);
  const RealVector& vals = eig.eigenvalues();
  double top = std::max(vals.maxCoeff(), 0.0);
  if (vals.minCoeff() < kPsdTolerance * std::max(top, 1.0)) {
    fail_numerical("non-PSD", "fidelity kernel has a negative eigenvalue " +
                                  std::to_string(vals.minCoeff()));
  }
  // Eigenvalues that are zero in exact arithmetic come back as O(eps * top);
  // without the cut each would still add O(sqrt(eps)) to the trace sum.
  const double cut =
      8.0 * std::numeric_limits<double>::epsilon() * vals.size() * top;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) > cut) sum += std::sqrt(vals(i));
  }
  double f = sum * sum;
  if (f < -kFidelitySlack || f > 1.0 + kFidelitySlack) {
    fail_numerical("non-PSD",
                   "fidelity " + std::to_string(f) + " outside [0, 1]");
  }
  return std::clamp(f, 0.0, 1.0);
}

double fidelity(const fock::SectorMatrix& a, const fock::SectorMatrix& b) {
  if (a.n_photons != b.n_photons) {
    fail_input("dimension-mismatch",
               "sector states hold different photon numbers");
  }
  return fidelity(a.matrix, b.matrix);
}

OverlapFit fit_overlap(const FringeData& data) {
  if (data.phases.size() != data.counts.size()) {
    fail_input("dimension-mismatch", "phase and count columns differ in length");
  }
  int n = static_cast<int>(data.phases.size());
  if (n < 5) {
    fail_input("insufficient-data",
               "fringe fit needs at least 5 points, got " + std::to_string(n));
  }
  if (!(data.background_u > 0.0) || !(data.background_v > 0.0)) {
    fail_input("invalid-config", "fringe backgrounds must be positive");
  }

  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = std::cos(2.0 * data.phases[i]);
    x(i, 2) = std::sin(2.0 * data.phases[i]);
    y(i) = data.counts[i];
    w(i) = 1.0 / std::max(data.counts[i], 1.0);
  }
  Eigen::Matrix3d normal = x.transpose() * w.asDiagonal() * x;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal);
  if (eig.eigenvalues().minCoeff() <
      1e-12 * std::max(eig.eigenvalues().maxCoeff(), 1e-300)) {
    fail_input("degenerate-design",
               "fringe phases do not distinguish the fit coefficients");
  }
  Eigen::Matrix3d cov = normal.inverse();
  Eigen::Vector3d beta = cov * (x.transpose() * w.asDiagonal() * y);

  OverlapFit fit;
  fit.offset = beta(0);
  double p = beta(1);
  double q = beta(2);
  fit.amplitude = std::hypot(p, q);
  fit.phase = std::atan2(q, p);
  if (fit.amplitude > 1e-12) {
    Eigen::Vector3d grad(0.0, p / fit.amplitude, q / fit.amplitude);
    fit.sigma_amplitude = std::sqrt(
        std::max(static_cast<double>(grad.transpose() * cov * grad), 0.0));
  } else {
    fit.sigma_amplitude = std::sqrt(std::max(cov(1, 1) + cov(2, 2), 0.0));
  }
  double norm = 2.0 * std::sqrt(data.background_u * data.background_v);
  double raw = fit.amplitude / norm;
  fit.ci95 = 1.96 * fit.sigma_amplitude / norm;
  fit.clipped = raw > 1.0;
  fit.overlap = std::clamp(raw, 0.0, 1.0);
  return fit;
}

BootstrapSummary bootstrap_fidelity(const measurement::DesignMatrix& design,
                                    const std::vector<long long>& counts,
                                    const fock::SectorMatrix& target,
                                    const std::vector<uint64_t>& trial_seeds,
                                    int jobs) {
  if (trial_seeds.empty()) {
    fail_input("invalid-config", "bootstrap needs at least one trial");
  }
  RealVector lambda = tomography::to_real_vector(counts);
  if (lambda.size() != design.entries.rows()) {
    fail_input("dimension-mismatch",
               "count vector does not match the design matrix");
  }
  int total = static_cast<int>(trial_seeds.size());
  std::vector<double> fids(total, 0.0);
  std::vector<char> failed(total, 0);
  run_indexed(total, jobs, [&](int t) {
    try {
      std::vector<long long> resampled =
          measurement::sample_counts(lambda, trial_seeds[t]);
      auto [estimate, report] =
          tomography::ml_reconstruct(design, tomography::to_real_vector(resampled));
      (void)report;
      fids[t] = fidelity(estimate, target);
    } catch (const Error&) {
      failed[t] = 1;
    }
  });
  return summarize_trials(fids, failed);
}

BootstrapSummary bootstrap_fidelity(const measurement::DesignMatrix& design,
                                    const std::vector<long long>& counts,
                                    const fock::SectorMatrix& target,
                                    const BootstrapOptions& options) {
  if (options.trials < 1) {
    fail_input("invalid-config", "bootstrap needs at least one trial");
  }
  std::vector<uint64_t> seeds(options.trials);
  for (int t = 0; t < options.trials; ++t) {
    seeds[t] = mix_seed(options.seed, static_cast<uint64_t>(t));
  }
  return bootstrap_fidelity(design, counts, target, seeds, options.jobs);
}

SweepResult transmission_sweep(const SweepConfig& config,
                               const fock::SectorMatrix& target) {
  if (config.etas.empty()) {
    fail_input("invalid-grid", "transmission sweep needs at least one point");
  }
  for (double eta : config.etas) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
      fail_input("eta-out-of-range",
                 "transmission " + std::to_string(eta) + " outside [0, 1]");
    }
  }
  if (config.pulses < 0.0) {
    fail_input("invalid-config", "pulses must be nonnegative");
  }
  if (config.mc_trials < 0) {
    fail_input("invalid-config", "mc_trials must be nonnegative");
  }
  if (target.n_photons != config.n_photons) {
    fail_input("dimension-mismatch",
               "sweep target holds a different photon number");
  }

  int n_max = config.n_max > 0 ? config.n_max
                               : prepare::default_n_max(config.n_photons);
  prepare::SourceParams source;
  source.gamma = config.gamma;
  source.epsilon = config.epsilon;
  source.phi_cs = config.phi_cs;
  source.eta = 1.0;
  source.n_max = n_max;
  fock::TwoModeState state = prepare::prepared_state(source);
  measurement::AngleSet angles = measurement::angle_set(config.n_photons);
  measurement::DesignMatrix design =
      measurement::design_matrix(config.n_photons, angles);

  bool noiseless = config.pulses == 0.0;
  double pulses = noiseless ? 1.0 : config.pulses;

  SweepResult out;
  for (size_t i = 0; i < config.etas.size(); ++i) {
    double eta = config.etas[i];
    RealVector expected =
        measurement::expected_counts(state, angles, pulses, eta);
    double fid = 0.0;
    double sigma = 0.0;
    if (noiseless) {
      auto [estimate, report] = tomography::ml_reconstruct(design, expected);
      (void)report;
      fid = fidelity(estimate, target);
    } else {
      uint64_t point_seed = mix_seed(config.seed, 2 * i);
      std::vector<long long> counts =
          measurement::sample_counts(expected, point_seed);
      auto [estimate, report] =
          tomography::ml_reconstruct(design, tomography::to_real_vector(counts));
      (void)report;
      fid = fidelity(estimate, target);
      if (config.mc_trials > 0) {
        BootstrapOptions boot;
        boot.trials = config.mc_trials;
        boot.seed = mix_seed(config.seed, 2 * i + 1);
        boot.jobs = config.jobs;
        sigma = bootstrap_fidelity(design, counts, target, boot).sigma;
      }
    }
    out.etas.push_back(eta);
    out.fidelities.push_back(fid);
    out.sigmas.push_back(sigma);
  }
  return out;
}

std::string csv_number(double value) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

std::string sweep_to_csv(const SweepResult& result, int n_photons) {
  std::string out = "n,eta,fidelity,sigma\n";
  for (size_t i = 0; i < result.etas.size(); ++i) {
    out += std::to_string(n_photons);
    out += ',';
    out += csv_number(result.etas[i]);
    out += ',';
    out += csv_number(result.fidelities[i]);
    out += ',';
    out += csv_number(i < result.sigmas.size() ? result.sigmas[i] : 0.0);
    out += '\n';
  }
  return out;
}

namespace {

bool parse_double_field(const std::string& field, double* value) {
  size_t pos = 0;
  try {
    *value = std::stod(field, &pos);
  } catch (const std::exception&) {
    return false;
  }
  while (pos < field.size() && std::isspace(static_cast<unsigned char>(field[pos]))) {
    ++pos;
  }
  return pos == field.size();
}

}  // namespace

FringeData fringe_from_csv(const std::string& text, double background_u,
                           double background_v) {
  FringeData data;
  data.background_u = background_u;
  data.background_v = background_v;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = true;
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    }
    if (blank) continue;
    size_t comma = line.find(',');
    if (comma == std::string::npos) {
      fail_input("schema-invalid-input",
                 "line " + std::to_string(line_no) + " is not 'phase,count'");
    }
    double phase = 0.0;
    double count = 0.0;
    bool ok = parse_double_field(line.substr(0, comma), &phase) &&
              parse_double_field(line.substr(comma + 1), &count);
    if (!ok) {
      if (line_no == 1 && data.phases.empty()) continue;  // header row
      fail_input("schema-invalid-input",
                 "line " + std::to_string(line_no) + " is not numeric");
    }
    data.phases.push_back(phase);
    data.counts.push_back(count);
  }
  if (data.phases.empty()) {
    fail_input("schema-invalid-input", "fringe table holds no data rows");
  }
  return data;
}

std::string fringe_fit_csv(const FringeData& data, const OverlapFit& fit) {
  std::string out = "phase,counts,fit\n";
  for (size_t i = 0; i < data.phases.size(); ++i) {
    out += csv_number(data.phases[i]);
    out += ',';
    out += csv_number(data.counts[i]);
    out += ',';
    out += csv_number(fit.evaluate(data.phases[i]));
    out += '\n';
  }
  return out;
}

}  // namespace noontomo::analysis
