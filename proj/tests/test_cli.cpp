#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "stab/config.hpp"
#include "stab/expr.hpp"
#include "stab/runner.hpp"

using namespace stab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  REQUIRE(bool(f));
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

const char* kFastHalfspeed = R"(
[run]
pipeline = ugas2uges
trajectories = 5
samples = 50

[system]
name = halfspeed_1d

[overrides]
gamma = identity
alpha4 = identity
)";

}  // namespace

TEST_CASE("expr: literals, precedence, parentheses, power, unary minus") {
  CHECK(parse_expr("1 + 2*3").eval(0.0) == 7.0);
  CHECK(parse_expr("(1 + 2)*3").eval(0.0) == 9.0);
  CHECK(parse_expr("2^3^2").eval(0.0) == 512.0);  // right associative
  CHECK(parse_expr("-2^2").eval(0.0) == -4.0);    // minus binds outside the power
  CHECK(parse_expr("6/4").eval(0.0) == 1.5);
  CHECK(parse_expr("1e-3 + 0.5").eval(0.0) == doctest::Approx(0.501));
}

TEST_CASE("expr: variables and the s alias") {
  const Expr e = parse_expr("-x1 + 2*d1 - x2^2");
  CHECK(e.max_x() == 2);
  CHECK(e.max_d() == 1);
  CHECK(e.eval({1.0, 3.0}, {0.5}) == -9.0);
  CHECK(parse_expr("2*s").eval(0.7) == doctest::Approx(1.4));
  CHECK(parse_expr("s^2/2").max_x() == 1);
}

TEST_CASE("expr: malformed input raises ConfigError") {
  for (const char* bad : {"", "x", "x0", "1 +", "(1", "2 ** 3", "foo", "1 2"}) {
    CHECK_THROWS_AS(parse_expr(bad), Error);
  }
  try {
    parse_expr("1 + *");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
}

TEST_CASE("config: sections, comments, quoting, lookup") {
  const auto cfg = ConfigFile::parse(
      "# header comment\n"
      "[run]\n"
      "pipeline = ugas2uges  # trailing comment\n"
      "tol = 1e-6\n"
      "out = \"dir with space\"\n"
      "\n"
      "[system]\n"
      "name = halfspeed_1d\n");
  CHECK(cfg.get_string("run", "pipeline") == "ugas2uges");
  CHECK(cfg.get_double("run", "tol", 0.0) == 1e-6);
  CHECK(cfg.get_string("run", "out") == "dir with space");
  CHECK(cfg.has("system", "name"));
  CHECK_FALSE(cfg.has("system", "rhs1"));
  CHECK(cfg.get_int("run", "missing", 7) == 7);
}

TEST_CASE("config: malformed input raises ConfigError") {
  CHECK_THROWS_AS(ConfigFile::parse("[run]\nkey_without_value\n"), Error);
  CHECK_THROWS_AS(ConfigFile::parse("key = 1\n"), Error);  // before any section
  CHECK_THROWS_AS(ConfigFile::parse("[run\n"), Error);
  CHECK_THROWS_AS(ConfigFile::parse("[run]\na = 1\na = 2\n"), Error);
  const auto cfg = ConfigFile::parse("[run]\ntol = abc\n");
  CHECK_THROWS_AS(cfg.get_double("run", "tol", 0.0), Error);
}

TEST_CASE("runner: fast halfspeed run passes and writes the artifact set") {
  const fs::path out = fs::temp_directory_path() / "stab_cli_test_run";
  fs::remove_all(out);
  RunOverrides ov;
  ov.out_dir = out.string();
  const auto res = run_config_parsed(ConfigFile::parse(kFastHalfspeed), ov);
  CHECK(res.exit_code == 0);
  CHECK(res.report_text.find("UGES: PASS") != std::string::npos);
  CHECK(fs::exists(out / "report.txt"));
  CHECK(fs::exists(out / "change_table.csv"));
  CHECK(fs::exists(out / "trajectories" / "traj_000.csv"));
  CHECK(slurp(out / "report.txt") == res.report_text);

  // identical config + seed: byte-identical CSV output
  const fs::path out2 = fs::temp_directory_path() / "stab_cli_test_run2";
  fs::remove_all(out2);
  ov.out_dir = out2.string();
  const auto res2 = run_config_parsed(ConfigFile::parse(kFastHalfspeed), ov);
  CHECK(res2.exit_code == 0);
  CHECK(slurp(out / "change_table.csv") == slurp(out2 / "change_table.csv"));
  CHECK(slurp(out / "trajectories" / "traj_004.csv")
        == slurp(out2 / "trajectories" / "traj_004.csv"));
  fs::remove_all(out);
  fs::remove_all(out2);
}

TEST_CASE("runner: exit code 2 on a failing lambda check") {
  const std::string cfg = std::string(kFastHalfspeed) + "\n[check]\nlambda = 2\n";
  RunOverrides ov;
  const fs::path out = fs::temp_directory_path() / "stab_cli_test_fail";
  fs::remove_all(out);
  ov.out_dir = out.string();
  const auto res = run_config_parsed(ConfigFile::parse(cfg), ov);
  CHECK(res.exit_code == 2);
  CHECK(res.report_text.find("UGES: FAIL") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("runner: exit code 4 on incompatible pipeline or bad keys") {
  auto code = [](const std::string& text) {
    RunOverrides ov;
    ov.out_dir = (fs::temp_directory_path() / "stab_cli_test_cfg").string();
    return run_config_parsed(ConfigFile::parse(text), ov).exit_code;
  };
  CHECK(code("[run]\npipeline = iss2ises\n[system]\nname = halfspeed_1d\n") == 4);
  CHECK(code("[run]\npipeline = nosuch\n[system]\nname = halfspeed_1d\n") == 4);
  CHECK(code("[run]\npipeline = ugas2uges\nbogus = 1\n[system]\nname = halfspeed_1d\n") == 4);
  CHECK(code("[run]\npipeline = ugas2uges\n[system]\nname = nosuch\n") == 4);
  CHECK(code("[run]\npipeline = ugas2uges\n[system]\ndim_x = 1\nrhs1 = -x1\n") == 4);
  CHECK(code("[run]\npipeline = ugas2uges\n[system]\ndim_x = 1\nrhs1 = -x9\n"
             "[certificate]\nV = x1^2\nalpha1 = s^2\n") == 4);
  fs::remove_all(fs::temp_directory_path() / "stab_cli_test_cfg");
}

TEST_CASE("runner: exit code 3 on a construction failure") {
  // gamma = s^2 violates gamma/gamma' >= s, caught while building the change
  const std::string cfg =
      "[run]\npipeline = ugas2uges\n[system]\nname = halfspeed_1d\n"
      "[overrides]\ngamma = s^2\nalpha4 = identity\n";
  RunOverrides ov;
  const fs::path out = fs::temp_directory_path() / "stab_cli_test_err3";
  fs::remove_all(out);
  ov.out_dir = out.string();
  const auto res = run_config_parsed(ConfigFile::parse(cfg), ov);
  CHECK(res.exit_code == 3);
  CHECK_FALSE(res.diagnostic.empty());
  fs::remove_all(out);
}

TEST_CASE("runner: missing config file is a config error") {
  const auto res = run_config("definitely_missing_config_file.cfg");
  CHECK(res.exit_code == 4);
}

TEST_CASE("cli binary: list and exit codes") {
  const char* cli = std::getenv("STAB_CLI");
  const char* cfg_dir = std::getenv("STAB_CONFIG_DIR");
  REQUIRE(cli != nullptr);
  REQUIRE(cfg_dir != nullptr);
  const std::string q = "\"";

  const std::string list_out = (fs::temp_directory_path() / "stab_cli_list.txt").string();
  CHECK(std::system((q + cli + q + " list > " + list_out).c_str()) == 0);
  const std::string listing = slurp(list_out);
  CHECK(listing.find("halfspeed_1d") != std::string::npos);
  CHECK(listing.find("iss_scalar") != std::string::npos);

  CHECK(std::system((q + cli + q + " list --machine > " + list_out).c_str()) == 0);
  CHECK(slurp(list_out).find("halfspeed_1d\t1\t0\t0") != std::string::npos);
  std::remove(list_out.c_str());

  auto run_cli = [&](const std::string& cfg_name, const std::string& extra = "") {
    const fs::path out = fs::temp_directory_path() / "stab_cli_bin_out";
    fs::remove_all(out);
    const std::string cmd = q + cli + q + " run " + q + cfg_dir + "/" + cfg_name + q +
                            " --out " + q + out.string() + q + extra + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    fs::remove_all(out);
    return WEXITSTATUS(status);
  };
  CHECK(run_cli("invalid.cfg") == 4);
  CHECK(run_cli("failing_lambda.cfg") == 2);
  CHECK(run_cli("halfspeed.cfg", " --signals 5") == 0);
}
