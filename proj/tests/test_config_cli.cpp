#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "hyperqubit/cli.hpp"
#include "hyperqubit/config.hpp"
#include "hyperqubit/trace_io.hpp"

using namespace hyperqubit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("hyperqubit_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path operator/(const std::string& name) const { return path / name; }
};

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "hyperqubit");
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  Run r;
  r.code = run_cli(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::vector<std::vector<double>> csv_rows(const fs::path& p, std::vector<std::string>& header) {
  const auto lines = lines_of(read_file(p));
  header.clear();
  std::stringstream hs(lines.at(0));
  for (std::string f; std::getline(hs, f, ',');) header.push_back(f);
  std::vector<std::vector<double>> rows;
  for (size_t i = 1; i < lines.size(); ++i) {
    std::stringstream ss(lines[i]);
    std::vector<double> row;
    for (std::string f; std::getline(ss, f, ',');) row.push_back(std::stod(f));
    rows.push_back(row);
  }
  return rows;
}

void check_schema_covers(const json& schema, const json& value, const std::string& where) {
  REQUIRE_MESSAGE(schema.contains("properties"), where);
  CHECK_MESSAGE(schema.value("additionalProperties", true) == false, where);
  for (const auto& [key, v] : value.items()) {
    INFO(where, key);
    REQUIRE(schema["properties"].contains(key));
    if (v.is_object()) check_schema_covers(schema["properties"][key], v, where + key + ".");
  }
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("profiles") {
  const RunConfig c = profile("paper-defaults");
  CHECK(c.physics.tau_ps == 133.0);
  CHECK(c.physics.fss_uev == 7.35);
  CHECK(c.noise.jitter_fwhm_ps == 30.0);
  CHECK(c.grid.n_bins == 600);
  CHECK(c.grid.bin_width == 2.0);
  CHECK_THROWS_AS(profile("lab"), ConfigError);
}

TEST_CASE("unknown keys and bad values name the field") {
  const RunConfig base = paper_defaults_profile();
  CHECK_THROWS_WITH_AS(apply_config_json(base, json{{"bogus", 1}}), doctest::Contains("bogus"), ConfigError);
  CHECK_THROWS_WITH_AS(apply_config_json(base, json{{"physics", {{"tau", 1.0}}}}), doctest::Contains("physics.tau"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(apply_config_json(base, json{{"noise", {{"seed", "x"}}}}), doctest::Contains("noise.seed"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(apply_config_json(base, json{{"noise", {{"mode", "fast"}}}}), doctest::Contains("noise.mode"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(apply_config_json(base, json{{"grid", {{"n_bins", -3}}}}), doctest::Contains("n_bins"),
                       std::invalid_argument);
  CHECK_THROWS_AS(apply_config_json(base, json::array()), ConfigError);
}

TEST_CASE("file values overlay the profile") {
  json j = {{"noise", {{"seed", 5}, {"mode", "expected-intensity"}}},
            {"metrics", {{"mixing_convention", "full_rate"}}},
            {"tomo", {{"m_omega", 0.318}, {"target", "none"}}}};
  const RunConfig c = apply_config_json(paper_defaults_profile(), j);
  CHECK(c.noise.seed == 5);
  CHECK(c.noise.mode == TraceMode::ExpectedIntensity);
  CHECK(c.noise.jitter_fwhm_ps == 30.0);
  CHECK(c.metrics.mixing == MixingConvention::FullRate);
  CHECK(*c.tomo.m_omega == 0.318);
  CHECK(c.tomo.target == FidelityTarget::None);
}

TEST_CASE("serialization round trip and hash") {
  RunConfig c = paper_defaults_profile();
  c.noise.seed = 99;
  c.pump.theta = 0.3;
  c.tomo.m_omega = 0.3;
  const RunConfig back = apply_config_json(paper_defaults_profile(), config_to_json(c));
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c) == config_hash(c));
  CHECK(config_hash(c).size() == 64);
  RunConfig moved = c;
  moved.output_dir = "elsewhere";
  CHECK(config_hash(moved) == config_hash(c));
  moved.noise.seed = 100;
  CHECK(config_hash(moved) != config_hash(c));
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("schema covers every serialized key") {
  const json schema = json::parse(read_file(HYPERQUBIT_DOCS_DIR "/run_config.schema.json"));
  RunConfig c = paper_defaults_profile();
  c.source.kind = SourceKind::Rho;
  c.source.rho = Matrix4c::Identity() / 4.0;
  c.tomo.m_omega = 0.3;
  check_schema_covers(schema, config_to_json(c), "");
  for (const auto& [key, v] : schema["properties"].items()) {
    INFO(key);
    CHECK_NOTHROW(apply_config_json(paper_defaults_profile(), json{{key, config_to_json(c)[key]}}));
  }
}

TEST_CASE("config file parse errors carry the position") {
  TempDir dir;
  write(dir / "bad.json", "{\n  \"noise\": {,\n}\n");
  CHECK_THROWS_WITH_AS(read_config_file(dir / "bad.json"), doctest::Contains("line 2"), ConfigError);
}

}

TEST_SUITE("cli") {

TEST_CASE("usage errors and help") {
  CHECK(run({"--help"}).code == kExitOk);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"simulate", "--no-such-flag"}).code == kExitUsage);
  CHECK(run({"--profile", "lab", "brightness"}).code == kExitUsage);
  CHECK(run({"--config", "/nonexistent/config.json", "brightness"}).code == kExitUsage);
  TempDir dir;
  const auto r = run({"--out", dir.path.string(), "simulate", "--source", "sunlight"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("--source") != std::string::npos);
}

TEST_CASE("simulate is deterministic and precedence is flag over file over profile") {
  TempDir dir;
  write(dir / "cfg.json", R"({"noise": {"seed": 5}})");
  const std::string a = (dir / "a").string(), b = (dir / "b").string(), c = (dir / "c").string();
  REQUIRE(run({"--config", (dir / "cfg.json").string(), "--out", a, "simulate"}).code == kExitOk);
  REQUIRE(run({"--config", (dir / "cfg.json").string(), "--out", b, "simulate"}).code == kExitOk);
  REQUIRE(run({"--config", (dir / "cfg.json").string(), "--seed", "7", "--out", c, "simulate"}).code == kExitOk);
  const std::string csv_a = read_file(fs::path(a) / "traces.csv");
  CHECK(csv_a == read_file(fs::path(b) / "traces.csv"));
  CHECK(read_file(fs::path(a) / "traces.json") == read_file(fs::path(b) / "traces.json"));
  CHECK(csv_a != read_file(fs::path(c) / "traces.csv"));
  CHECK(lines_of(csv_a).size() == 601);
  CHECK(lines_of(csv_a)[0] == "time_ps,H,V,D,A,R,L");
  const json meta_a = json::parse(read_file(fs::path(a) / "traces.json"));
  const json meta_c = json::parse(read_file(fs::path(c) / "traces.json"));
  CHECK(meta_a["seed"] == 5);
  CHECK(meta_c["seed"] == 7);
  CHECK(meta_a["config_hash"] != meta_c["config_hash"]);
  CHECK(meta_a["mode"] == "sampled-counts");
}

TEST_CASE("a horizontally polarized source splits evenly in the diagonal and circular bases") {
  TempDir dir;
  write(dir / "cfg.json", R"({"pump": {"theta_rad": 0.0}, "noise": {"mode": "expected-intensity"}})");
  REQUIRE(run({"--config", (dir / "cfg.json").string(), "--out", dir.path.string(), "simulate"}).code == kExitOk);
  std::vector<std::string> header;
  const auto rows = csv_rows(dir / "traces.csv", header);
  REQUIRE(header == std::vector<std::string>{"time_ps", "H", "V", "D", "A", "R", "L"});
  double h_total = 0.0;
  for (const auto& r : rows) {
    h_total += r[1];
    CHECK(std::abs(r[2]) < 1e-9 * std::max(r[1], 1.0));
    for (int k = 3; k < 7; ++k) CHECK(std::abs(r[static_cast<size_t>(k)] - 0.5 * r[1]) < 1e-9 * std::max(r[1], 1.0));
  }
  CHECK(h_total > 1e5);
}

TEST_CASE("malformed trace files are rejected with the location") {
  TempDir dir;
  REQUIRE(run({"--out", dir.path.string(), "simulate"}).code == kExitOk);
  const auto lines = lines_of(read_file(dir / "traces.csv"));

  std::vector<std::string> no_l;
  for (const auto& l : lines) no_l.push_back(l.substr(0, l.rfind(',')));
  write(dir / "no_l.csv", join(no_l));
  fs::copy_file(dir / "traces.json", dir / "no_l.json");
  auto r = run({"--out", dir.path.string(), "tomo", "--traces", (dir / "no_l.csv").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("missing basis L") != std::string::npos);

  std::vector<std::string> bad = lines;
  bad[10] = bad[10].substr(0, bad[10].find(',')) + ",12,abc,3,4,5,6";
  write(dir / "bad.csv", join(bad));
  fs::copy_file(dir / "traces.json", dir / "bad.json");
  r = run({"--out", dir.path.string(), "tomo", "--traces", (dir / "bad.csv").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("row 11, column V") != std::string::npos);

  r = run({"--out", dir.path.string(), "tomo", "--traces", (dir / "absent.csv").string()});
  CHECK(r.code == kExitUsage);
}

TEST_CASE("tomography round trip through files") {
  TempDir dir;
  REQUIRE(run({"--out", dir.path.string(), "simulate", "--source", "phi-plus"}).code == kExitOk);
  const auto r = run({"--out", dir.path.string(), "tomo", "--traces", (dir / "traces.csv").string(), "--seeds", "2"});
  REQUIRE(r.code == kExitOk);
  const json j = json::parse(read_file(dir / "tomo_result.json"));
  CHECK(j["fidelity"].get<double>() >= 0.999);
  CHECK(j["entanglement"]["concurrence"].get<double>() == doctest::Approx(0.829).epsilon(0.01));
  CHECK(j["entanglement"]["basis"] == "orthogonalized");
  CHECK(j["config_hash"].get<std::string>().size() == 64);
  CHECK(fs::exists(dir / "tomo_report.txt"));
  CHECK(r.out.find("fidelity") != std::string::npos);
}

TEST_CASE("unfittable traces exit with the numerical code") {
  TempDir dir;
  REQUIRE(run({"--out", dir.path.string(), "simulate"}).code == kExitOk);
  auto lines = lines_of(read_file(dir / "traces.csv"));
  for (size_t i = 1; i < lines.size(); ++i) lines[i] = lines[i].substr(0, lines[i].find(',')) + ",1e308,1e308,1e308,1e308,1e308,1e308";
  write(dir / "huge.csv", join(lines));
  fs::copy_file(dir / "traces.json", dir / "huge.json");
  CHECK(run({"--out", dir.path.string(), "tomo", "--traces", (dir / "huge.csv").string(), "--seeds", "1"}).code ==
        kExitNumerical);
}

TEST_CASE("metrics with the reference fixture") {
  TempDir dir;
  const auto r = run({"--out", dir.path.string(), "metrics", "--rho", HYPERQUBIT_DATA_DIR "/paper_rho.json"});
  REQUIRE(r.code == kExitOk);
  const json j = json::parse(read_file(dir / "metrics.json"));
  CHECK(j["M_omega"].get<double>() == doctest::Approx(0.312).epsilon(0.001 / 0.312));
  CHECK(j["bound"].get<double>() == doctest::Approx(0.829).epsilon(0.002 / 0.829));
  CHECK(j["state"]["fidelity_phi_plus"].get<double>() == doctest::Approx(0.947).epsilon(0.005 / 0.947));
  CHECK(j["brightness"]["b_fl"].get<double>() == doctest::Approx(0.287).epsilon(0.02 / 0.287));
  CHECK(j["homscan"].size() == 91);
  CHECK(j["transmission"]["setup"]["total"].get<double>() == doctest::Approx(0.32).epsilon(0.005 / 0.32));
}

TEST_CASE("homscan and brightness outputs") {
  TempDir dir;
  REQUIRE(run({"--out", dir.path.string(), "homscan", "--points", "5", "--calibrated"}).code == kExitOk);
  std::vector<std::string> header;
  const auto rows = csv_rows(dir / "homscan.csv", header);
  CHECK(header == std::vector<std::string>{"theta_rad", "M_unfiltered", "M_HH", "M_HV", "M_VV"});
  REQUIRE(rows.size() == 5);
  CHECK(rows[0][1] == doctest::Approx(0.922).epsilon(1e-6));
  CHECK(fs::exists(dir / "homscan.json"));
  CHECK(run({"--out", dir.path.string(), "homscan", "--points", "0"}).code == kExitUsage);

  const auto b = run({"--out", dir.path.string(), "brightness"});
  REQUIRE(b.code == kExitOk);
  const json j = json::parse(read_file(dir / "brightness.json"));
  CHECK(j["b_fl"].get<double>() == doctest::Approx(0.287).epsilon(0.02 / 0.287));
  CHECK(run({"--out", dir.path.string(), "brightness", "--r-det", "3.4"}).code == kExitOk);
  CHECK(json::parse(read_file(dir / "brightness.json"))["b_fl"].get<double>() ==
        doctest::Approx(0.208).epsilon(0.02 / 0.208));
  CHECK(run({"--out", dir.path.string(), "brightness", "--t-tom", "0"}).code == kExitUsage);
}

}
