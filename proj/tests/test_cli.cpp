#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

// Drives the installed binary end to end through a shell.
namespace {

namespace fs = std::filesystem;

const std::string kBinary = NOONTOMO_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "noontomo_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run(const std::string& args) {
  static int counter = 0;
  fs::path out = work_dir() / ("stdout_" + std::to_string(counter) + ".txt");
  fs::path err = work_dir() / ("stderr_" + std::to_string(counter) + ".txt");
  ++counter;
  std::string cmd = kBinary + " " + args + " > " + out.string() + " 2> " + err.string();
  int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  result.out = slurp(out);
  result.err = slurp(err);
  return result;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// First number printed after `label` on stdout; NaN when absent.
double value_after(const std::string& text, const std::string& label) {
  size_t pos = text.find(label);
  if (pos == std::string::npos) return std::nan("");
  return std::stod(text.substr(pos + label.size()));
}

}  // namespace

TEST_CASE("help exits cleanly, a bare call does not") {
  CHECK(run("--help").exit_code == 0);
  CHECK(run("simulate --help").exit_code == 0);
  RunResult bare = run("");
  CHECK(bare.exit_code == 2);
}

TEST_CASE("simulate writes a complete count record") {
  fs::path out = work_dir() / "sim_basic.json";
  RunResult r = run("simulate --n 2 --no-noise --out " + out.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("n=2") != std::string::npos);

  nlohmann::json j = nlohmann::json::parse(read_file(out));
  CHECK(j["n_photons"] == 2);
  CHECK(j["settings"].size() == 9);
  CHECK(j["counts"].size() == 9);
  CHECK(j["settings"][0].contains("theta"));
  CHECK(j["settings"][0].contains("phi"));
  CHECK(j["pulses"] == 1000000);
  CHECK(j["eta"] == 1.0);
  CHECK(j["metadata"]["noise"] == false);
  long long total = 0;
  for (const auto& c : j["counts"]) total += c.get<long long>();
  CHECK(total > 0);
}

TEST_CASE("noise requires a seed and is reproducible byte for byte") {
  fs::path a = work_dir() / "sim_a.json";
  fs::path b = work_dir() / "sim_b.json";
  fs::path c = work_dir() / "sim_c.json";

  RunResult noseed = run("simulate --n 2 --out " + a.string());
  CHECK(noseed.exit_code == 2);
  CHECK(noseed.err.find("invalid-config") != std::string::npos);

  CHECK(run("simulate --n 2 --seed 7 --pulses 1e5 --out " + a.string()).exit_code == 0);
  CHECK(run("simulate --n 2 --seed 7 --pulses 1e5 --out " + b.string()).exit_code == 0);
  CHECK(run("simulate --n 2 --seed 8 --pulses 1e5 --out " + c.string()).exit_code == 0);
  CHECK(read_file(a) == read_file(b));
  CHECK(read_file(a) != read_file(c));
}

TEST_CASE("simulate validates parameters with input exit codes") {
  fs::path out = work_dir() / "sim_bad.json";
  CHECK(run("simulate --n 9 --no-noise --out " + out.string()).exit_code == 2);
  CHECK(run("simulate --n 2 --eta 1.4 --no-noise --out " + out.string()).exit_code == 2);
  CHECK(run("simulate --n 2 --epsilon 1.0 --no-noise --out " + out.string()).exit_code == 2);
  CHECK(run("simulate --n 2 --gamma -1 --no-noise --out " + out.string()).exit_code == 2);
  CHECK(run("simulate --n 2 --gamma nonsense --no-noise --out " + out.string()).exit_code == 2);
  CHECK(run("simulate --n 2 --nmax 1 --no-noise --out " + out.string()).exit_code == 2);
}

TEST_CASE("the truncation override is honored") {
  fs::path out = work_dir() / "sim_nmax.json";
  CHECK(run("simulate --n 2 --no-noise --nmax 12 --out " + out.string()).exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(read_file(out));
  CHECK(j["metadata"]["n_max"] == 12);

  std::string env_cmd = "NOONTOMO_NMAX=11 " + kBinary + " simulate --n 2 --no-noise --out " +
                        out.string() + " > /dev/null 2>&1";
  CHECK(std::system(env_cmd.c_str()) == 0);
  j = nlohmann::json::parse(read_file(out));
  CHECK(j["metadata"]["n_max"] == 11);
}

TEST_CASE("reconstruct recovers the simulated state and reports fidelity") {
  fs::path counts = work_dir() / "rt_counts.json";
  fs::path est = work_dir() / "rt_est.json";
  CHECK(run("simulate --n 2 --no-noise --out " + counts.string()).exit_code == 0);

  RunResult r = run("reconstruct --in " + counts.string() + " --out " + est.string() +
                    " --target noon");
  CHECK(r.exit_code == 0);
  CHECK(value_after(r.out, "fidelity = ") > 0.999);

  nlohmann::json j = nlohmann::json::parse(read_file(est));
  CHECK(j["n_photons"] == 2);
  CHECK(j["re"].size() == 3);
  CHECK(j["im"].size() == 3);
  CHECK(j["re"][0].size() == 3);
  CHECK(std::abs(j["trace"].get<double>() - 1.0) < 1e-9);
  CHECK(j["report"]["converged"] == true);
  CHECK(j["report"]["iterations"].get<int>() > 0);
  // Provenance flows through from the input record.
  CHECK(j["metadata"]["command"] == "simulate");
}

TEST_CASE("reconstruct reports bootstrap error bars when asked") {
  fs::path counts = work_dir() / "mc_counts.json";
  fs::path est = work_dir() / "mc_est.json";
  CHECK(run("simulate --n 2 --pulses 1e5 --seed 3 --out " + counts.string()).exit_code == 0);

  RunResult noseed = run("reconstruct --in " + counts.string() + " --out " + est.string() +
                         " --target noon --mc-trials 8");
  CHECK(noseed.exit_code == 2);

  RunResult r = run("reconstruct --in " + counts.string() + " --out " + est.string() +
                    " --target noon --mc-trials 8 --seed 1 --jobs 2");
  CHECK(r.exit_code == 0);
  CHECK(value_after(r.out, "fidelity = ") > 0.9);
  CHECK(r.out.find("±") != std::string::npos);
}

TEST_CASE("reconstruct rejects broken inputs and degenerate counts") {
  fs::path est = work_dir() / "err_est.json";

  RunResult missing = run("reconstruct --in /nonexistent.json --out " + est.string());
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("io-error") != std::string::npos);

  fs::path garbage = work_dir() / "garbage.json";
  write_file(garbage, "{not json");
  CHECK(run("reconstruct --in " + garbage.string() + " --out " + est.string()).exit_code == 2);

  fs::path truncated = work_dir() / "truncated.json";
  write_file(truncated, "{\"n_photons\": 2}");
  RunResult r = run("reconstruct --in " + truncated.string() + " --out " + est.string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("schema-invalid-input") != std::string::npos);

  // All-dark data is structurally valid but numerically unreconstructable.
  fs::path counts = work_dir() / "dark_counts.json";
  CHECK(run("simulate --n 2 --no-noise --out " + counts.string()).exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(read_file(counts));
  for (auto& c : j["counts"]) c = 0;
  write_file(counts, j.dump(2) + "\n");
  RunResult dark = run("reconstruct --in " + counts.string() + " --out " + est.string());
  CHECK(dark.exit_code == 1);
  CHECK(dark.err.find("zero-trace") != std::string::npos);
}

TEST_CASE("reconstruct compares against a hole-state target") {
  fs::path counts = work_dir() / "cph_counts.json";
  fs::path est = work_dir() / "cph_est.json";
  CHECK(run("simulate --n 3 --gamma 3 --phi-cs 3.141592653589793 --no-noise --out " +
            counts.string())
            .exit_code == 0);
  RunResult r = run("reconstruct --in " + counts.string() + " --out " + est.string() +
                    " --target cph --gamma 3 --phi-cs 3.141592653589793");
  CHECK(r.exit_code == 0);
  CHECK(value_after(r.out, "fidelity = ") > 0.99);
}

TEST_CASE("a reconstruction estimate can serve as a file target") {
  fs::path counts = work_dir() / "ft_counts.json";
  fs::path est = work_dir() / "ft_est.json";
  fs::path est2 = work_dir() / "ft_est2.json";
  CHECK(run("simulate --n 2 --no-noise --out " + counts.string()).exit_code == 0);
  CHECK(run("reconstruct --in " + counts.string() + " --out " + est.string()).exit_code == 0);
  // Reconstructing the same data against the previous estimate: fidelity 1.
  RunResult r = run("reconstruct --in " + counts.string() + " --out " + est2.string() +
                    " --target " + est.string());
  CHECK(r.exit_code == 0);
  CHECK(value_after(r.out, "fidelity = ") > 0.99999);
}

TEST_CASE("overlap fits a fringe table") {
  fs::path fringe = work_dir() / "fringe.csv";
  fs::path fit = work_dir() / "fit.csv";
  std::ostringstream table;
  table << "phase,counts\n";
  for (int k = 0; k < 12; ++k) {
    double phi = 2.0 * M_PI * k / 12.0;
    table << phi << "," << 2000.0 + 1940.0 * std::cos(2.0 * phi) << "\n";
  }
  write_file(fringe, table.str());

  RunResult r = run("overlap --in " + fringe.string() + " --u 1000 --v 1000 --out " +
                    fit.string());
  CHECK(r.exit_code == 0);
  CHECK(value_after(r.out, "overlap = ") == doctest::Approx(0.97).epsilon(1e-4));
  CHECK(r.out.find("(95% CI)") != std::string::npos);
  std::string curve = read_file(fit);
  CHECK(curve.rfind("phase,counts,fit\n", 0) == 0);

  RunResult missing = run("overlap --in /nope.csv --u 1 --v 1 --out " + fit.string());
  CHECK(missing.exit_code == 2);

  fs::path bad = work_dir() / "bad_fringe.csv";
  write_file(bad, "phase,counts\n0,100\n");
  CHECK(run("overlap --in " + bad.string() + " --u 1 --v 1 --out " + fit.string()).exit_code ==
        2);
}

TEST_CASE("sweep writes one long-format table across photon numbers") {
  fs::path out = work_dir() / "sweep.csv";
  RunResult r = run("sweep --n 2,3 --grid 0.5:1:0.25 --out " + out.string());
  CHECK(r.exit_code == 0);
  std::string csv = read_file(out);
  CHECK(csv.rfind("n,eta,fidelity,sigma\n", 0) == 0);
  size_t lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 7);  // header + 3 points x 2 photon numbers
  CHECK(csv.find("\n2,0.5,") != std::string::npos);
  CHECK(csv.find("\n3,1,") != std::string::npos);
  // Only one header even with several N.
  CHECK(csv.find("n,eta,fidelity,sigma", 1) == std::string::npos);
}

TEST_CASE("sweep validates the grid and seed requirements") {
  fs::path out = work_dir() / "sweep_bad.csv";
  CHECK(run("sweep --n 2 --grid 0.5:0.1:0.2 --out " + out.string()).exit_code == 2);
  CHECK(run("sweep --n 2 --grid 0:1:0.5:9 --out " + out.string()).exit_code == 2);
  CHECK(run("sweep --n 2 --grid nonsense --out " + out.string()).exit_code == 2);
  CHECK(run("sweep --n 2 --grid 0.5:2:0.5 --out " + out.string()).exit_code == 2);
  // Noisy sweeps need a seed.
  CHECK(run("sweep --n 2 --grid 0.5:1:0.5 --pulses 1e6 --out " + out.string()).exit_code == 2);
  // eta = 0 in the grid is an input problem surfaced as a numerical failure.
  RunResult dark = run("sweep --n 2 --grid 0:1:0.5 --out " + out.string());
  CHECK(dark.exit_code == 1);
}

TEST_CASE("config files fill in flags but never override them") {
  fs::path cfg = work_dir() / "sim_config.json";
  fs::path out_a = work_dir() / "cfg_a.json";
  fs::path out_b = work_dir() / "cfg_b.json";
  nlohmann::json config = {{"n", 3}, {"pulses", 2e5}, {"seed", 21}, {"eta", 0.4}};
  write_file(cfg, config.dump(2) + "\n");

  RunResult r = run("simulate --config " + cfg.string() + " --out " + out_a.string());
  CHECK(r.exit_code == 0);
  nlohmann::json a = nlohmann::json::parse(read_file(out_a));
  CHECK(a["n_photons"] == 3);
  CHECK(a["eta"] == 0.4);
  CHECK(a["pulses"] == 200000);

  // An explicit flag beats the config value.
  RunResult r2 = run("simulate --config " + cfg.string() + " --eta 0.9 --out " + out_b.string());
  CHECK(r2.exit_code == 0);
  nlohmann::json b = nlohmann::json::parse(read_file(out_b));
  CHECK(b["eta"] == 0.9);

  nlohmann::json bad = {{"n", 2}, {"unknown_knob", 1}};
  write_file(cfg, bad.dump(2) + "\n");
  RunResult r3 = run("simulate --config " + cfg.string() + " --no-noise --out " + out_b.string());
  CHECK(r3.exit_code == 2);
  CHECK(r3.err.find("invalid-config") != std::string::npos);
}

TEST_CASE("the full pipeline runs simulate, reconstruct, and sweep at low light") {
  fs::path counts = work_dir() / "pipe_counts.json";
  fs::path est = work_dir() / "pipe_est.json";
  RunResult sim = run("simulate --n 2 --eta 0.11 --pulses 1e9 --seed 1 --out " +
                      counts.string());
  CHECK(sim.exit_code == 0);
  RunResult rec = run("reconstruct --in " + counts.string() + " --out " + est.string() +
                      " --target noon");
  CHECK(rec.exit_code == 0);
  // Frozen regression value for this seed.
  CHECK(value_after(rec.out, "fidelity = ") == doctest::Approx(0.958520465).epsilon(1e-6));
}
