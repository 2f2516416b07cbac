// Command-line front end: simulate counts, reconstruct density matrices,
// fit fringe overlaps, and sweep transmission. All outputs are deterministic
// for fixed flags and seed.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "noontomo/analysis.hpp"
#include "noontomo/fock.hpp"
#include "noontomo/measurement.hpp"
#include "noontomo/prepare.hpp"
#include "noontomo/tomography.hpp"
#include "noontomo/types.hpp"

namespace {

using namespace noontomo;
using nlohmann::json;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_input("io-error", "cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail_input("io-error", "cannot read '" + path + "'");
  return buf.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_input("io-error", "cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) fail_input("io-error", "cannot write '" + path + "'");
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail_input("schema-invalid-input", what + ": " + e.what());
  }
}

// Optional JSON config file: top-level object whose keys mirror the long
// option names of the invoked subcommand. Values are applied only where the
// command line did not set the option, so flags always win.
class ConfigBindings {
 public:
  void bind(const std::string& key, CLI::Option* option,
            std::function<void(const json&)> apply) {
    entries_[key] = {option, std::move(apply)};
  }

  void apply_file(const std::string& path) const {
    if (path.empty()) return;
    json j = parse_json(read_text(path), "config '" + path + "'");
    if (!j.is_object()) {
      fail_input("invalid-config", "config root must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
      auto it = entries_.find(key);
      if (it == entries_.end()) {
        fail_input("invalid-config", "unknown config key '" + key + "'");
      }
      if (it->second.option != nullptr && it->second.option->count() > 0) {
        continue;  // flag wins
      }
      try {
        it->second.apply(value);
      } catch (const json::exception& e) {
        fail_input("invalid-config", "config key '" + key + "': " + e.what());
      }
    }
  }

 private:
  struct Entry {
    CLI::Option* option = nullptr;
    std::function<void(const json&)> apply;
  };
  std::map<std::string, Entry> entries_;
};

double json_number(const json& v) {
  if (!v.is_number()) throw json::type_error::create(302, "expected a number", &v);
  return v.get<double>();
}

std::string format_double(double v) { return analysis::csv_number(v); }

// gamma is "auto" or a nonnegative number; phi_cs may be left to the
// optimizer under auto. Returns the resolved pair.
struct ResolvedSource {
  double gamma = 0.0;
  double phi_cs = 0.0;
};

ResolvedSource resolve_source(const std::string& gamma_text, bool phi_given,
                              double phi_value, int n_photons) {
  ResolvedSource out;
  if (gamma_text == "auto") {
    prepare::GammaOptimum opt = prepare::optimal_gamma(n_photons);
    out.gamma = opt.gamma;
    out.phi_cs = phi_given ? phi_value : opt.phi_cs;
    return out;
  }
  size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(gamma_text, &pos);
  } catch (const std::exception&) {
    fail_input("invalid-config", "--gamma must be a number or 'auto'");
  }
  if (pos != gamma_text.size()) {
    fail_input("invalid-config", "--gamma must be a number or 'auto'");
  }
  if (!(value >= 0.0)) {
    fail_input("invalid-config", "--gamma must be nonnegative");
  }
  out.gamma = value;
  out.phi_cs = phi_given ? phi_value : 0.0;
  return out;
}

int resolve_n_max(int n_photons, bool nmax_given, int nmax_value) {
  if (!nmax_given) return prepare::default_n_max(n_photons);
  if (nmax_value < n_photons || nmax_value > 64) {
    fail_input("invalid-config", "--nmax must lie in [" +
                                     std::to_string(n_photons) + ", 64]");
  }
  return nmax_value;
}

fock::SectorMatrix sector_from_json(const json& j) {
  for (const char* key : {"n_photons", "re", "im"}) {
    if (!j.contains(key)) {
      fail_input("schema-invalid-input",
                 std::string("missing field '") + key + "'");
    }
  }
  fock::SectorMatrix sector;
  try {
    sector.n_photons = j.at("n_photons").get<int>();
    int d = sector.n_photons + 1;
    const json& re = j.at("re");
    const json& im = j.at("im");
    if (!re.is_array() || !im.is_array() || int(re.size()) != d ||
        int(im.size()) != d) {
      fail_input("schema-invalid-input", "'re' and 'im' must be " +
                                             std::to_string(d) + "x" +
                                             std::to_string(d) + " arrays");
    }
    sector.matrix = ComplexMatrix::Zero(d, d);
    for (int r = 0; r < d; ++r) {
      if (int(re.at(r).size()) != d || int(im.at(r).size()) != d) {
        fail_input("schema-invalid-input", "matrix rows have wrong length");
      }
      for (int c = 0; c < d; ++c) {
        sector.matrix(r, c) =
            Complex(re.at(r).at(c).get<double>(), im.at(r).at(c).get<double>());
      }
    }
  } catch (const json::exception& e) {
    fail_input("schema-invalid-input", e.what());
  }
  sector.normalized = std::abs(sector.matrix.trace().real() - 1.0) < 1e-8;
  return sector;
}

json sector_to_json(const fock::SectorMatrix& sector) {
  int d = sector.dim();
  json re = json::array();
  json im = json::array();
  for (int r = 0; r < d; ++r) {
    json re_row = json::array();
    json im_row = json::array();
    for (int c = 0; c < d; ++c) {
      re_row.push_back(sector.matrix(r, c).real());
      im_row.push_back(sector.matrix(r, c).imag());
    }
    re.push_back(std::move(re_row));
    im.push_back(std::move(im_row));
  }
  return json{{"n_photons", sector.n_photons},
              {"re", std::move(re)},
              {"im", std::move(im)},
              {"trace", sector.matrix.trace().real()}};
}

// target name: "noon", "cph", or a path to a sector-matrix JSON file.
fock::SectorMatrix resolve_target(const std::string& name, int n_photons,
                                  bool have_source, double gamma,
                                  double phi_cs) {
  if (name == "noon") return prepare::ideal_noon(n_photons);
  if (name == "cph") {
    if (!have_source) {
      fail_input("invalid-config",
                 "target 'cph' needs gamma and phi-cs (flag or metadata)");
    }
    return prepare::ideal_cph(n_photons, gamma, phi_cs);
  }
  fock::SectorMatrix sector =
      sector_from_json(parse_json(read_text(name), "target '" + name + "'"));
  if (sector.n_photons != n_photons) {
    fail_input("dimension-mismatch",
               "target file holds N=" + std::to_string(sector.n_photons) +
                   ", data holds N=" + std::to_string(n_photons));
  }
  return sector;
}

std::vector<double> parse_grid(const std::string& text) {
  double start = 0.0, end = 0.0, step = 0.0;
  size_t first = text.find(':');
  size_t second = first == std::string::npos ? std::string::npos
                                             : text.find(':', first + 1);
  if (first == std::string::npos || second == std::string::npos ||
      text.find(':', second + 1) != std::string::npos) {
    fail_input("invalid-grid", "grid must be start:end:step, got '" + text + "'");
  }
  auto field = [&](const std::string& part, double* value) {
    size_t pos = 0;
    try {
      *value = std::stod(part, &pos);
    } catch (const std::exception&) {
      return false;
    }
    return pos == part.size();
  };
  if (!field(text.substr(0, first), &start) ||
      !field(text.substr(first + 1, second - first - 1), &end) ||
      !field(text.substr(second + 1), &step)) {
    fail_input("invalid-grid", "grid fields must be numbers, got '" + text + "'");
  }
  if (!(step > 0.0) || start > end || start < 0.0 || end > 1.0) {
    fail_input("invalid-grid", "grid needs 0 <= start <= end <= 1 and step > 0");
  }
  std::vector<double> points;
  for (int i = 0;; ++i) {
    double eta = start + step * i;
    if (eta > end + 1e-12) break;
    points.push_back(std::min(eta, 1.0));
  }
  return points;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  int n = 0;
  std::string gamma = "auto";
  double epsilon = 0.05;
  double phi_cs = 0.0;
  double eta = 1.0;
  double pulses = 1000000.0;
  uint64_t seed = 0;
  bool seed_set = false;
  bool no_noise = false;
  int nmax = 0;
  bool nmax_set = false;
  bool phi_set = false;
  std::string out;
  std::string config;
};

void run_simulate(const SimulateArgs& a) {
  if (a.out.empty()) {
    fail_input("invalid-config", "--out is required (flag or config)");
  }
  if (a.n < 1 || a.n > 6) {
    fail_input("unsupported-N", "--n must lie in [1, 6]");
  }
  if (!(a.pulses > 0.0)) {
    fail_input("invalid-config", "--pulses must be positive");
  }
  if (!(a.eta >= 0.0 && a.eta <= 1.0)) {
    fail_input("eta-out-of-range", "--eta must lie in [0, 1]");
  }
  if (!a.no_noise && !a.seed_set) {
    fail_input("invalid-config", "--seed is required unless --no-noise is set");
  }
  ResolvedSource src = resolve_source(a.gamma, a.phi_set, a.phi_cs, a.n);
  int n_max = resolve_n_max(a.n, a.nmax_set, a.nmax);

  prepare::SourceParams params;
  params.gamma = src.gamma;
  params.epsilon = a.epsilon;
  params.phi_cs = src.phi_cs;
  params.eta = a.eta;
  params.n_max = n_max;
  fock::TwoModeState state = prepare::prepared_state(params);
  measurement::AngleSet angles = measurement::angle_set(a.n);
  RealVector expected =
      measurement::expected_counts(state, angles, a.pulses, a.eta);

  measurement::CountRecord record;
  record.n_photons = a.n;
  record.settings = angles;
  record.pulses = llround(a.pulses);
  record.eta = a.eta;
  if (a.no_noise) {
    record.counts.reserve(angles.settings.size());
    for (Eigen::Index k = 0; k < expected.size(); ++k) {
      record.counts.push_back(llround(expected(k)));
    }
  } else {
    record.counts = measurement::sample_counts(expected, a.seed);
  }

  long long total = 0;
  for (long long c : record.counts) total += c;
  if (total == 0) {
    std::cerr << "warning: expected counts are all zero at eta = "
              << format_double(a.eta) << "\n";
  }

  record.metadata = json{{"command", "simulate"},
                         {"gamma", src.gamma},
                         {"phi_cs", src.phi_cs},
                         {"epsilon", a.epsilon},
                         {"eta", a.eta},
                         {"n_max", n_max},
                         {"pulses", record.pulses},
                         {"noise", !a.no_noise}};
  if (!a.no_noise) record.metadata["seed"] = a.seed;

  write_text(a.out, measurement::to_json(record).dump(2) + "\n");
  std::cout << "n=" << a.n << " gamma=" << format_double(src.gamma)
            << " phi_cs=" << format_double(src.phi_cs)
            << " epsilon=" << format_double(a.epsilon)
            << " eta=" << format_double(a.eta) << " n_max=" << n_max
            << " settings=" << angles.size() << " total_counts=" << total
            << "\n";
  std::cout << "wrote " << a.out << "\n";
}

// -------------------------------------------------------------- reconstruct

struct ReconstructArgs {
  std::string in;
  std::string out;
  std::string target;
  std::string gamma;
  double phi_cs = 0.0;
  bool phi_set = false;
  int mc_trials = 0;
  uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
  std::string config;
};

void run_reconstruct(const ReconstructArgs& a) {
  if (a.in.empty() || a.out.empty()) {
    fail_input("invalid-config", "--in and --out are required (flag or config)");
  }
  if (a.jobs < 1) fail_input("invalid-config", "--jobs must be at least 1");
  if (a.mc_trials < 0) fail_input("invalid-config", "--mc-trials must be nonnegative");
  if (a.mc_trials > 0 && !a.seed_set) {
    fail_input("invalid-config", "--seed is required with --mc-trials");
  }
  measurement::CountRecord record = measurement::count_record_from_json(
      parse_json(read_text(a.in), "'" + a.in + "'"));
  measurement::DesignMatrix design =
      measurement::design_matrix(record.n_photons, record.settings);
  auto [estimate, report] = tomography::ml_reconstruct(
      design, tomography::to_real_vector(record.counts));
  if (!report.converged) {
    fail_numerical("solver-failure",
                   "no convergence after " + std::to_string(report.iterations) +
                       " iterations (kkt " + format_double(report.kkt_residual) +
                       ")");
  }

  json out = sector_to_json(estimate);
  out["report"] = json{{"objective", report.objective},
                       {"iterations", report.iterations},
                       {"converged", report.converged},
                       {"kkt_residual", report.kkt_residual}};
  if (!record.metadata.is_null() && !record.metadata.empty()) {
    out["metadata"] = record.metadata;
  }
  write_text(a.out, out.dump(2) + "\n");
  std::cout << "objective=" << format_double(report.objective)
            << " iterations=" << report.iterations
            << " kkt=" << format_double(report.kkt_residual) << "\n";

  if (!a.target.empty()) {
    bool have_source = false;
    double gamma = 0.0;
    double phi = 0.0;
    if (!a.gamma.empty()) {
      ResolvedSource src =
          resolve_source(a.gamma, a.phi_set, a.phi_cs, record.n_photons);
      gamma = src.gamma;
      phi = src.phi_cs;
      have_source = true;
    } else if (record.metadata.contains("gamma") &&
               record.metadata.contains("phi_cs")) {
      gamma = json_number(record.metadata.at("gamma"));
      phi = a.phi_set ? a.phi_cs : json_number(record.metadata.at("phi_cs"));
      have_source = true;
    }
    fock::SectorMatrix target =
        resolve_target(a.target, record.n_photons, have_source, gamma, phi);
    double fid = analysis::fidelity(estimate, target);
    if (a.mc_trials > 0) {
      analysis::BootstrapOptions boot;
      boot.trials = a.mc_trials;
      boot.seed = a.seed;
      boot.jobs = a.jobs;
      analysis::BootstrapSummary mc =
          analysis::bootstrap_fidelity(design, record.counts, target, boot);
      char line[96];
      std::snprintf(line, sizeof(line), "fidelity = %.3f±%.3f\n", fid,
                    mc.sigma);
      std::cout << line;
    } else {
      std::cout << "fidelity = " << format_double(fid) << "\n";
    }
  }
  std::cout << "wrote " << a.out << "\n";
}

// ------------------------------------------------------------------ overlap

struct OverlapArgs {
  std::string in;
  std::string out;
  double u = 0.0;
  double v = 0.0;
  std::string config;
};

void run_overlap(const OverlapArgs& a) {
  if (a.in.empty() || a.out.empty()) {
    fail_input("invalid-config", "--in and --out are required (flag or config)");
  }
  analysis::FringeData data = analysis::fringe_from_csv(read_text(a.in), a.u, a.v);
  analysis::OverlapFit fit = analysis::fit_overlap(data);
  if (fit.clipped) {
    std::cerr << "warning: raw overlap exceeded 1 and was clipped\n";
  }
  std::cout << "overlap = " << format_double(fit.overlap) << " ± "
            << format_double(fit.ci95) << " (95% CI)\n";
  write_text(a.out, analysis::fringe_fit_csv(data, fit));
  std::cout << "wrote " << a.out << "\n";
}

// -------------------------------------------------------------------- sweep

struct SweepArgs {
  std::vector<int> ns;
  std::string grid;
  std::string gamma = "auto";
  double phi_cs = 0.0;
  bool phi_set = false;
  double epsilon = 0.05;
  double pulses = 0.0;
  uint64_t seed = 0;
  bool seed_set = false;
  int mc_trials = 0;
  int jobs = 1;
  std::string target = "noon";
  int nmax = 0;
  bool nmax_set = false;
  std::string out;
  std::string config;
};

void run_sweep(const SweepArgs& a) {
  if (a.out.empty()) {
    fail_input("invalid-config", "--out is required (flag or config)");
  }
  if (a.ns.empty()) fail_input("invalid-config", "--n needs at least one value");
  for (int n : a.ns) {
    if (n < 1 || n > 6) fail_input("unsupported-N", "--n values must lie in [1, 6]");
  }
  if (a.pulses < 0.0) fail_input("invalid-config", "--pulses must be nonnegative");
  if (a.pulses > 0.0 && !a.seed_set) {
    fail_input("invalid-config", "--seed is required when pulses > 0");
  }
  if (a.jobs < 1) fail_input("invalid-config", "--jobs must be at least 1");
  bool file_target = a.target != "noon" && a.target != "cph";
  if (file_target && a.ns.size() > 1) {
    fail_input("invalid-config", "a target file needs a single --n value");
  }
  std::vector<double> etas = parse_grid(a.grid);

  std::string csv;
  for (size_t idx = 0; idx < a.ns.size(); ++idx) {
    int n = a.ns[idx];
    ResolvedSource src = resolve_source(a.gamma, a.phi_set, a.phi_cs, n);
    fock::SectorMatrix target =
        resolve_target(a.target, n, true, src.gamma, src.phi_cs);
    analysis::SweepConfig config;
    config.n_photons = n;
    config.gamma = src.gamma;
    config.phi_cs = src.phi_cs;
    config.epsilon = a.epsilon;
    config.etas = etas;
    config.pulses = a.pulses;
    config.seed = a.seed + idx;
    config.n_max = a.nmax_set ? resolve_n_max(n, true, a.nmax) : 0;
    config.mc_trials = a.pulses > 0.0 ? a.mc_trials : 0;
    config.jobs = a.jobs;
    analysis::SweepResult result = analysis::transmission_sweep(config, target);
    std::string table = analysis::sweep_to_csv(result, n);
    if (idx == 0) {
      csv = table;
    } else {
      csv += table.substr(table.find('\n') + 1);  // drop repeated header
    }
    std::cout << "n=" << n << " gamma=" << format_double(src.gamma)
              << " phi_cs=" << format_double(src.phi_cs)
              << " points=" << result.etas.size() << " F(eta_max)="
              << format_double(result.fidelities.back()) << "\n";
  }
  write_text(a.out, csv);
  std::cout << "wrote " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-mode multiphoton state tomography toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  ConfigBindings sim_cfg;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Synthesize tomography counts for a prepared source state");
  {
    auto* o_n = simulate->add_option("--n", sim.n, "Photon number N (1..6), required");
    auto* o_gamma = simulate->add_option("--gamma", sim.gamma,
                                         "Pair-amplitude ratio, or 'auto'");
    auto* o_eps = simulate->add_option("--epsilon", sim.epsilon,
                                       "Squeezing amplitude in [0, 1)");
    auto* o_phi = simulate->add_option("--phi-cs", sim.phi_cs,
                                       "Coherent-source phase (radians)");
    auto* o_eta = simulate->add_option("--eta", sim.eta, "Transmission in [0, 1]");
    auto* o_pulses = simulate->add_option("--pulses", sim.pulses, "Pulses per setting");
    auto* o_seed = simulate->add_option("--seed", sim.seed, "RNG seed (required unless --no-noise)");
    auto* o_nonoise = simulate->add_flag("--no-noise", sim.no_noise,
                                         "Write rounded expected counts instead of Poisson draws");
    auto* o_nmax = simulate->add_option("--nmax", sim.nmax,
                                        "Fock cutoff (default N+6 or NOONTOMO_NMAX)");
    auto* o_out = simulate->add_option("--out", sim.out, "Output JSON path, required");
    simulate->add_option("--config", sim.config, "JSON config file (flags win)");
    sim_cfg.bind("n", o_n, [&](const json& v) { sim.n = v.get<int>(); });
    sim_cfg.bind("gamma", o_gamma, [&](const json& v) {
      sim.gamma = v.is_string() ? v.get<std::string>() : format_double(json_number(v));
    });
    sim_cfg.bind("epsilon", o_eps, [&](const json& v) { sim.epsilon = json_number(v); });
    sim_cfg.bind("phi-cs", o_phi, [&](const json& v) {
      sim.phi_cs = json_number(v);
      sim.phi_set = true;
    });
    sim_cfg.bind("eta", o_eta, [&](const json& v) { sim.eta = json_number(v); });
    sim_cfg.bind("pulses", o_pulses, [&](const json& v) { sim.pulses = json_number(v); });
    sim_cfg.bind("seed", o_seed, [&](const json& v) {
      sim.seed = v.get<uint64_t>();
      sim.seed_set = true;
    });
    sim_cfg.bind("no-noise", o_nonoise, [&](const json& v) { sim.no_noise = v.get<bool>(); });
    sim_cfg.bind("nmax", o_nmax, [&](const json& v) {
      sim.nmax = v.get<int>();
      sim.nmax_set = true;
    });
    sim_cfg.bind("out", o_out, [&](const json& v) { sim.out = v.get<std::string>(); });
    simulate->callback([&, o_phi, o_seed, o_nmax]() {
      sim.phi_set = sim.phi_set || o_phi->count() > 0;
      sim.seed_set = sim.seed_set || o_seed->count() > 0;
      sim.nmax_set = sim.nmax_set || o_nmax->count() > 0;
      sim_cfg.apply_file(sim.config);
      run_simulate(sim);
    });
  }

  ReconstructArgs rec;
  ConfigBindings rec_cfg;
  CLI::App* reconstruct = app.add_subcommand(
      "reconstruct", "Maximum-likelihood density matrix from a count record");
  {
    auto* o_in = reconstruct->add_option("--in", rec.in, "Count record JSON, required");
    auto* o_out = reconstruct->add_option("--out", rec.out, "Output JSON path, required");
    auto* o_target = reconstruct->add_option(
        "--target", rec.target, "Fidelity target: noon, cph, or a sector JSON file");
    auto* o_gamma = reconstruct->add_option(
        "--gamma", rec.gamma, "Source gamma for a cph target (number or 'auto')");
    auto* o_phi = reconstruct->add_option("--phi-cs", rec.phi_cs,
                                          "Source phase for a cph target (radians)");
    auto* o_mc = reconstruct->add_option("--mc-trials", rec.mc_trials,
                                         "Bootstrap trials for the fidelity error bar");
    auto* o_seed = reconstruct->add_option("--seed", rec.seed, "RNG seed for the bootstrap");
    auto* o_jobs = reconstruct->add_option("--jobs", rec.jobs, "Worker threads for the bootstrap");
    reconstruct->add_option("--config", rec.config, "JSON config file (flags win)");
    rec_cfg.bind("in", o_in, [&](const json& v) { rec.in = v.get<std::string>(); });
    rec_cfg.bind("out", o_out, [&](const json& v) { rec.out = v.get<std::string>(); });
    rec_cfg.bind("target", o_target, [&](const json& v) { rec.target = v.get<std::string>(); });
    rec_cfg.bind("gamma", o_gamma, [&](const json& v) {
      rec.gamma = v.is_string() ? v.get<std::string>() : format_double(json_number(v));
    });
    rec_cfg.bind("phi-cs", o_phi, [&](const json& v) {
      rec.phi_cs = json_number(v);
      rec.phi_set = true;
    });
    rec_cfg.bind("mc-trials", o_mc, [&](const json& v) { rec.mc_trials = v.get<int>(); });
    rec_cfg.bind("seed", o_seed, [&](const json& v) {
      rec.seed = v.get<uint64_t>();
      rec.seed_set = true;
    });
    rec_cfg.bind("jobs", o_jobs, [&](const json& v) { rec.jobs = v.get<int>(); });
    reconstruct->callback([&, o_phi, o_seed]() {
      rec.phi_set = rec.phi_set || o_phi->count() > 0;
      rec.seed_set = rec.seed_set || o_seed->count() > 0;
      rec_cfg.apply_file(rec.config);
      run_reconstruct(rec);
    });
  }

  OverlapArgs ovl;
  ConfigBindings ovl_cfg;
  CLI::App* overlap = app.add_subcommand(
      "overlap", "Fit a two-source interference fringe and report the overlap");
  {
    auto* o_in = overlap->add_option("--in", ovl.in, "Fringe CSV (phase,counts), required");
    auto* o_u = overlap->add_option("--u", ovl.u, "First single-source count level, required");
    auto* o_v = overlap->add_option("--v", ovl.v, "Second single-source count level, required");
    auto* o_out = overlap->add_option("--out", ovl.out, "Fitted curve CSV path, required");
    overlap->add_option("--config", ovl.config, "JSON config file (flags win)");
    ovl_cfg.bind("in", o_in, [&](const json& v) { ovl.in = v.get<std::string>(); });
    ovl_cfg.bind("u", o_u, [&](const json& v) { ovl.u = json_number(v); });
    ovl_cfg.bind("v", o_v, [&](const json& v) { ovl.v = json_number(v); });
    ovl_cfg.bind("out", o_out, [&](const json& v) { ovl.out = v.get<std::string>(); });
    overlap->callback([&]() {
      ovl_cfg.apply_file(ovl.config);
      run_overlap(ovl);
    });
  }

  SweepArgs swp;
  ConfigBindings swp_cfg;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Reconstruction fidelity versus transmission on an eta grid");
  {
    auto* o_n = sweep->add_option("--n", swp.ns, "Photon numbers, comma separated, required")
                    ->delimiter(',');
    auto* o_grid = sweep->add_option("--grid", swp.grid, "Eta grid start:end:step, required");
    auto* o_gamma = sweep->add_option("--gamma", swp.gamma, "Pair-amplitude ratio, or 'auto'");
    auto* o_phi = sweep->add_option("--phi-cs", swp.phi_cs, "Coherent-source phase (radians)");
    auto* o_eps = sweep->add_option("--epsilon", swp.epsilon, "Squeezing amplitude in [0, 1)");
    auto* o_pulses = sweep->add_option("--pulses", swp.pulses,
                                       "Pulses per setting; 0 for noiseless");
    auto* o_seed = sweep->add_option("--seed", swp.seed, "RNG seed (required when pulses > 0)");
    auto* o_mc = sweep->add_option("--mc-trials", swp.mc_trials,
                                   "Bootstrap trials per grid point");
    auto* o_jobs = sweep->add_option("--jobs", swp.jobs, "Worker threads for the bootstrap");
    auto* o_target = sweep->add_option("--target", swp.target,
                                       "Fidelity target: noon, cph, or a sector JSON file");
    auto* o_nmax = sweep->add_option("--nmax", swp.nmax,
                                     "Fock cutoff (default N+6 or NOONTOMO_NMAX)");
    auto* o_out = sweep->add_option("--out", swp.out, "Output CSV path, required");
    sweep->add_option("--config", swp.config, "JSON config file (flags win)");
    swp_cfg.bind("n", o_n, [&](const json& v) {
      swp.ns.clear();
      if (v.is_array()) {
        for (const auto& item : v) swp.ns.push_back(item.get<int>());
      } else {
        swp.ns.push_back(v.get<int>());
      }
    });
    swp_cfg.bind("grid", o_grid, [&](const json& v) { swp.grid = v.get<std::string>(); });
    swp_cfg.bind("gamma", o_gamma, [&](const json& v) {
      swp.gamma = v.is_string() ? v.get<std::string>() : format_double(json_number(v));
    });
    swp_cfg.bind("phi-cs", o_phi, [&](const json& v) {
      swp.phi_cs = json_number(v);
      swp.phi_set = true;
    });
    swp_cfg.bind("epsilon", o_eps, [&](const json& v) { swp.epsilon = json_number(v); });
    swp_cfg.bind("pulses", o_pulses, [&](const json& v) { swp.pulses = json_number(v); });
    swp_cfg.bind("seed", o_seed, [&](const json& v) {
      swp.seed = v.get<uint64_t>();
      swp.seed_set = true;
    });
    swp_cfg.bind("mc-trials", o_mc, [&](const json& v) { swp.mc_trials = v.get<int>(); });
    swp_cfg.bind("jobs", o_jobs, [&](const json& v) { swp.jobs = v.get<int>(); });
    swp_cfg.bind("target", o_target, [&](const json& v) { swp.target = v.get<std::string>(); });
    swp_cfg.bind("nmax", o_nmax, [&](const json& v) {
      swp.nmax = v.get<int>();
      swp.nmax_set = true;
    });
    swp_cfg.bind("out", o_out, [&](const json& v) { swp.out = v.get<std::string>(); });
    sweep->callback([&, o_phi, o_seed, o_nmax]() {
      swp.phi_set = swp.phi_set || o_phi->count() > 0;
      swp.seed_set = swp.seed_set || o_seed->count() > 0;
      swp.nmax_set = swp.nmax_set || o_nmax->count() > 0;
      swp_cfg.apply_file(swp.config);
      run_sweep(swp);
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Input ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
