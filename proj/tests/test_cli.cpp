#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code;
  std::string out;
};

std::string binary() {
  const char* p = std::getenv("HILBFLOW_BIN");
  REQUIRE_MESSAGE(p != nullptr, "HILBFLOW_BIN must point at the CLI binary");
  return p;
}

RunResult run(const std::string& args) {
  std::string cmd = binary() + " " + args + " 2>&1";
  std::FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  int status = pclose(pipe);
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("validate suite passes for the deformed family") {
  RunResult r = run("validate --tau 0.5");
  CHECK(r.code == 0);
  CHECK(r.out.find("all identity suites pass") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("").code == 2);                       // missing subcommand
  CHECK(run("frobnicate").code == 2);             // unknown subcommand
  CHECK(run("census --no-such-flag").code == 2);  // unknown option
  CHECK(run("orbit --eps 0 -T 100").code == 2);   // rejected by the engine
  CHECK(run("sweep -o /tmp/x.csv --tau-step -0.1").code == 2);
  CHECK(run("sweep -o /tmp/x.csv --tau-grid ,").code == 2);   // empty grid
  CHECK(run("sweep -o /tmp/x.csv --tau-grid 0.4,0.0").code == 2);  // unsorted
  CHECK(run("sweep --tau-grid 0.0").code == 2);   // missing required -o
  CHECK(run("validate -p 2 -q 3 -r 6").code == 3);  // flat triangle, not usage
}

TEST_CASE("short orbits report but flag non-convergence") {
  RunResult r = run("orbit -T 12 -L 8 --seed 4");
  CHECK(r.code == 0);
  CHECK(r.out.find("[non-convergent]") != std::string::npos);
  CHECK(r.out.find("chi+") != std::string::npos);
}

TEST_CASE("census and count print summaries") {
  RunResult c = run("census -L 8 --tau 0.3");
  CHECK(c.code == 0);
  CHECK(c.out.find("classes") != std::string::npos);
  RunResult n = run("count -L 8");
  CHECK(n.code == 3);  // radius-8 census is too thin for counting
  CHECK(n.out.find("insufficient-census") != std::string::npos);
}

TEST_CASE("sweep output is deterministic byte for byte") {
  fs::path a = fs::temp_directory_path() / "hilb_sweep_a.csv";
  fs::path b = fs::temp_directory_path() / "hilb_sweep_b.csv";
  std::string args = "-L 10 -T 120 --n-orbits 8 --seed 11 --tau-grid -0.2,0,0.2 -o ";
  RunResult r1 = run("sweep " + args + a.string());
  RunResult r2 = run("sweep " + args + b.string());
  CHECK(r1.code == 0);
  CHECK(r2.code == 0);
  std::string ca = slurp(a), cb = slurp(b);
  CHECK(!ca.empty());
  CHECK(ca == cb);

  // The explain pass over a fresh sweep is clean.
  RunResult ex = run("explain " + a.string());
  CHECK(ex.code == 0);
  CHECK(ex.out.find("all hold") != std::string::npos);

  // Tampering with a value breaks an identity and is caught.
  std::string tampered = ca;
  size_t line2 = tampered.find('\n') + 1;
  size_t field = line2;
  for (int i = 0; i < 8; ++i) field = tampered.find(',', field) + 1;  // h_srb column
  size_t end = tampered.find(',', field);
  tampered.replace(field, end - field, "0.123");
  fs::path t = fs::temp_directory_path() / "hilb_sweep_t.csv";
  std::ofstream(t) << tampered;
  RunResult et = run("explain " + t.string());
  CHECK(et.code == 4);
  CHECK(et.out.find("identity violated") != std::string::npos);

  // A missing column is a format error naming the header.
  std::string headerless = ca.substr(ca.find(',') + 1);
  fs::path h = fs::temp_directory_path() / "hilb_sweep_h.csv";
  std::ofstream(h) << headerless;
  RunResult eh = run("explain " + h.string());
  CHECK(eh.code == 4);
  CHECK(eh.out.find("format") != std::string::npos);

  fs::remove(a);
  fs::remove(b);
  fs::remove(t);
  fs::remove(h);
}

TEST_CASE("config files feed options and reject unknown keys") {
  fs::path cfg = fs::temp_directory_path() / "hilb_cli.cfg";
  std::ofstream(cfg) << "[census]\ntau=0.3\nL=8\n";
  RunResult from_cfg = run("--config " + cfg.string() + " census");
  RunResult from_flags = run("census --tau 0.3 -L 8");
  CHECK(from_cfg.code == 0);
  CHECK(from_cfg.out == from_flags.out);

  // Command-line flags win over the config file.
  RunResult overridden = run("--config " + cfg.string() + " census --tau 0.0 -L 8");
  RunResult direct = run("census --tau 0.0 -L 8");
  CHECK(overridden.out == direct.out);

  std::ofstream(cfg) << "[census]\nbogus_key=1\n";
  CHECK(run("--config " + cfg.string() + " census").code == 2);
  fs::remove(cfg);
}
