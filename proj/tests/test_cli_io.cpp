#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "garnetspin/commands.hpp"
#include "garnetspin/config.hpp"
#include "garnetspin/io.hpp"

using namespace garnetspin;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::initializer_list<std::string> args) {
  std::vector<std::string> store{"garnetspin"};
  store.insert(store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : store) argv.push_back(s.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "garnetspin_test_cli_io";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = work_dir() / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_path() { return (data_dir() / "table1.cfg").string(); }
std::string dataset_path() { return (data_dir() / "odnmr_synthetic.csv").string(); }

std::string error_of(const std::string& cfg) {
  std::istringstream in(cfg);
  try {
    parse_config(in, "run.cfg");
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

std::string resonance_error(const std::string& text) {
  std::istringstream in(text);
  try {
    read_resonances(in, "data.csv");
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("bundled configuration") {
  const auto cfg = load_config(config_path());
  CHECK(cfg.convention == Convention::si_table);
  CHECK(cfg.search_model == SplittingModel::signed_sum);
  const auto g = cfg.ground.parameters().effective_g();
  CHECK(std::abs(g.x()) == doctest::Approx(27.0));
  CHECK(std::abs(g.y()) == doctest::Approx(146.0));
  CHECK(std::abs(cfg.excited.parameters().effective_g().z()) == doctest::Approx(16.0));
}

TEST_CASE("config errors name the line") {
  CHECK(error_of("ground.g_J = 1.16\nnonsense\n").rfind("run.cfg:2:", 0) == 0);
  CHECK(error_of("# c\n\nunknown.key = 3\n").rfind("run.cfg:3:", 0) == 0);
  CHECK(error_of("ground.g = 1, 2\n").rfind("run.cfg:1:", 0) == 0);
  CHECK(error_of("convention = literal\n").rfind("run.cfg:1:", 0) == 0);
  CHECK(error_of("ground.g = 1, 2, 3\nground.AJ_lambda = -1e-3, -1e-3, -1e-3\n").find("run.cfg:2:") == 0);
  CHECK(error_of("paths.data = /definitely/not/here\n").find("does not exist") != std::string::npos);
  CHECK_THROWS_AS(load_config(work_dir() / "missing.cfg"), InputError);

  std::istringstream ok("grid.b_step = 0.002\nseed = 5\nsearch.model = magnitude\n");
  const auto cfg = parse_config(ok, "run.cfg");
  CHECK(cfg.grid.b_step == 0.002);
  CHECK(cfg.seed == 5);
  CHECK(cfg.search_model == SplittingModel::magnitude);
}

TEST_CASE("resonance file errors") {
  const std::string header = "angle_deg,frequency_MHz,kind,site\n";
  CHECK(resonance_error(header + "0,10,ground,1\n10,11,difference,1\n").find("one kind per file") != std::string::npos);
  const auto bad_row = resonance_error(header + "0,10,ground,1\n10,abc,ground,1\n");
  CHECK(bad_row.rfind("data.csv:3:", 0) == 0);
  CHECK(bad_row.find("row 2") != std::string::npos);
  CHECK(resonance_error("angle_deg,frequency_MHz,kind,colour\n").find("unknown column 'colour'") !=
        std::string::npos);
  CHECK(resonance_error("0,10,ground\n").find("header") != std::string::npos);
  CHECK(resonance_error(header + "0,10,ground,9\n").find("site must be") != std::string::npos);
  CHECK(resonance_error("").find("missing header") != std::string::npos);
  CHECK_THROWS_AS(load_resonances(work_dir() / "missing.csv"), InputError);
}

TEST_CASE("resonance metadata overrides the scan") {
  std::istringstream in(
      "# scan.optical_axis = 0, 1, -1\n# scan.field_T = 0.05\nangle_deg,frequency_MHz,kind\n0,10,ground\n");
  const auto file = read_resonances(in, "data.csv");
  REQUIRE(file.resonances.size() == 1);
  CHECK_FALSE(file.resonances[0].site.has_value());
  const auto cfg = with_metadata(default_config(), file, "data.csv");
  CHECK(cfg.scan.field_magnitude == 0.05);
  CHECK((cfg.scan.optical_axis - Vec3(0, 1, -1)).norm() < 1e-12);
}

TEST_CASE("resonance round trip") {
  RotationScan scan;
  scan.optical_axis = Vec3(1, 1, 0);
  scan.field_magnitude = 0.03;
  std::vector<Resonance> rs{{0.0, 12.5, ResonanceKind::ground_splitting, 2, 1.0, std::nullopt},
                            {10.0, 0.123456789, ResonanceKind::ground_splitting, std::nullopt, 2.0, 0.04}};
  std::ostringstream out;
  write_resonances(out, rs, scan, Convention::equal_projection, 17);
  std::istringstream in(out.str());
  const auto file = read_resonances(in, "round.csv");
  REQUIRE(file.resonances.size() == 2);
  CHECK(file.resonances[0].site == 2);
  CHECK(file.resonances[1].frequency == doctest::Approx(0.123456789).epsilon(1e-12));
  CHECK(file.resonances[1].weight == 2.0);
  CHECK(file.resonances[1].field_tesla == doctest::Approx(0.04));
  const auto cfg = with_metadata(default_config(), file, "round.csv");
  CHECK(cfg.convention == Convention::equal_projection);
  CHECK(out.str().rfind("# seed = 17\n", 0) == 0);
  CHECK(cfg.scan.field_magnitude == doctest::Approx(0.03));
}

TEST_CASE("trace reader") {
  std::istringstream good("# kind=odnmr seed=4\noffset_MHz,amplitude\n0.1,0\n0.2,1\n0.3,0\n");
  const auto t = read_trace(good, "t.csv");
  CHECK(t.kind == TraceKind::odnmr);
  CHECK(t.seed == 4);
  CHECK(t.offsets.size() == 3);
  std::istringstream uneven("offset_MHz,amplitude\n0,0\n1,0\n3,0\n");
  CHECK_THROWS_AS(read_trace(uneven, "t.csv"), InputError);
  std::istringstream short_trace("offset_MHz,amplitude\n0,0\n");
  CHECK_THROWS_AS(read_trace(short_trace, "t.csv"), InputError);
}

TEST_CASE("cli predict and fit") {
  const auto p = run({"predict", "--config", config_path(), "--convention", "equal-projection", "--field", "1"});
  CHECK(p.code == exit_ok);
  CHECK(p.out.find("site") != std::string::npos);

  const fs::path tensors = work_dir() / "tensors.csv";
  const auto f = run({"fit", dataset_path(), "--config", config_path(), "--out", tensors.string()});
  REQUIRE(f.code == exit_ok);
  const std::string csv = slurp(tensors);
  CHECK(csv.rfind("file,component,value_MHz_per_T", 0) == 0);
  CHECK(fs::exists(work_dir() / "tensors_residuals.csv"));
  CHECK(fs::exists(work_dir() / "tensors_assignment.csv"));

  const auto file = load_resonances(dataset_path());
  auto cfg = with_metadata(load_config(config_path()), file, dataset_path());
  FitProblem problem;
  problem.resonances = file.resonances;
  problem.scan = cfg.scan;
  problem.convention = cfg.convention;
  const auto r = fit_ground_tensor(problem);
  const std::array<double, 3> truth{27.0, 146.0, 36.0};
  for (int a = 0; a < 3; ++a) CHECK(std::abs(std::abs(r.g_values.g[a]) / truth[a] - 1.0) < 0.02);
}

TEST_CASE("cli exit codes") {
  const auto sparse = write_file("sparse.csv", "angle_deg,frequency_MHz,kind,site\n0,10,ground,1\n10,11,ground,1\n");
  CHECK(run({"fit", sparse.string(), "--config", config_path()}).code == exit_numerical);

  const auto mixed = write_file("mixed.csv", "angle_deg,frequency_MHz,kind\n0,10,ground\n10,11,difference\n");
  const auto m = run({"fit", mixed.string()});
  CHECK(m.code == exit_input);
  CHECK(m.err.find("mixed.csv:3:") != std::string::npos);

  const auto bad_cfg = write_file("bad.cfg", "ground.g = 1, 2\n");
  CHECK(run({"predict", "--config", bad_cfg.string()}).code == exit_input);
  CHECK(run({"predict", "--out", "/nonexistent-dir/x.csv"}).code == exit_input);
  CHECK(run({"predict", "--direction", "0,0,0"}).code == exit_input);
  CHECK(run({"no-such-command"}).code == exit_input);
}

TEST_CASE("cli synth is deterministic") {
  const auto a = run({"synth", "shb", "--config", config_path(), "--noise", "0.01", "--seed", "3"});
  const auto b = run({"synth", "shb", "--config", config_path(), "--noise", "0.01", "--seed", "3"});
  const auto c = run({"synth", "shb", "--config", config_path(), "--noise", "0.01", "--seed", "4"});
  REQUIRE(a.code == exit_ok);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);

  const auto trace = write_file("trace.csv", a.out);
  const auto peaks = run({"find-peaks", trace.string(), "--holes"});
  CHECK(peaks.code == exit_ok);
  CHECK_FALSE(peaks.out.empty());
}

TEST_CASE("cli scan-clock for site 1") {
  const auto r = run({"scan-clock", "--config", config_path(), "--site", "1"});
  REQUIRE(r.code == exit_ok);
  std::istringstream lines(r.out);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) rows += line.rfind("1,", 0) == 0;
  CHECK(rows == 4);
}

TEST_CASE("cli verify") {
  const auto r = run({"verify", "--config", config_path(), "--skip-clock", "--fit-seeds", "3"});
  CHECK(r.out.find("equal-projection") != std::string::npos);
  CHECK(r.out.find("si-table") != std::string::npos);
  CHECK(r.out.find("branching max site 1") != std::string::npos);

  const auto perturbed = write_file("perturbed.cfg", "ground.g = 27, 160, 36\n");
  const auto p = run({"verify", "--config", perturbed.string(), "--skip-clock", "--fit-seeds", "3"});
  CHECK(p.code != exit_ok);
  CHECK(p.out.find("FAIL  effective g ground y") != std::string::npos);
  CHECK(p.out.find("FAIL  linear Zeeman ground") != std::string::npos);
}
