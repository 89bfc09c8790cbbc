#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fedrep/runner.hpp"
#include "fedrep/trace_io.hpp"

using namespace fedrep;

TEST_CASE("empty config text gives the published defaults") {
  const ExperimentConfig config = parse_config_text("");
  CHECK(config.n == 100);
  CHECK(config.d == 10);
  CHECK(config.k == 2);
  CHECK(config.m == 5);
  CHECK(config.r == doctest::Approx(0.1));
  CHECK(config.noise_var == doctest::Approx(1e-3));
  CHECK(config.algo == "fedrep");
  CHECK(config.data_mode == "fresh");
  CHECK_FALSE(config.ortho);
}

TEST_CASE("file values parse and flags override them") {
  ExperimentConfig config = parse_config_text(
      "# comment\n"
      "[run]\n"
      "eta = 0.05\n"
      "grad_mode = population   # trailing comment\n"
      "ortho = on\n"
      "seed = 77\n");
  CHECK(config.eta == doctest::Approx(0.05));
  CHECK(config.grad_mode == "population");
  CHECK(config.ortho);
  CHECK(config.seed == 77);
  apply_config_key(config, "eta", "0.01");
  CHECK(config.eta == doctest::Approx(0.01));
}

TEST_CASE("bad config input is rejected with the key named") {
  CHECK_THROWS_WITH_AS(parse_config_text("bogus_key = 1\n"),
                       doctest::Contains("bogus_key"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("eta = fast\n"),
                       doctest::Contains("eta"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("rounds = -3\n"),
                       doctest::Contains("rounds"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("grad_mode = psychic\n"),
                       doctest::Contains("grad_mode"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("just a line\n"), ConfigError);
}

TEST_CASE("config round-trips through its serialization") {
  ExperimentConfig config;
  config.command = "fullmeas";
  config.n = 31;
  config.k = 3;
  config.eta = 0.0123456789012345;
  config.r = 1.0 / 3.0;
  config.ortho = true;
  config.grad_mode = "population";
  config.algo = "10gd";
  config.out = "results/run7.csv";
  config.alpha = -1.0;
  config.seed = 18446744073709551615ULL;  // max u64
  const ExperimentConfig reparsed = parse_config_text(config.serialize());
  CHECK(reparsed == config);
}

TEST_CASE("experiment csv has replicate blocks, a summary, and is stable") {
  ExperimentConfig config;
  config.command = "fedrep";
  config.n = 12;
  config.d = 6;
  config.k = 2;
  config.m = 5;
  config.r = 0.5;
  config.rounds = 6;
  config.replicates = 3;
  config.seed = 5;
  const RunOutput first = run_experiment(config);
  const RunOutput second = run_experiment(config);
  CHECK(first.csv == second.csv);
  CHECK(first.csv.find("schema_version,1") == 0);
  CHECK(first.csv.find("replicate,0,seed,5") != std::string::npos);
  CHECK(first.csv.find("replicate,1,seed,6") != std::string::npos);
  CHECK(first.csv.find("replicate,2,seed,7") != std::string::npos);
  CHECK(first.csv.find("summary,replicates,3") != std::string::npos);

  // 6 training rounds -> 7 records per replicate.
  size_t data_rows = 0;
  std::istringstream lines(first.csv);
  std::string line;
  bool in_summary = false;
  while (std::getline(lines, line)) {
    if (line.rfind("summary", 0) == 0) in_summary = true;
    if (!in_summary && !line.empty() && std::isdigit(line.front())) ++data_rows;
  }
  CHECK(data_rows == 3 * 7);

  const nlohmann::json manifest = nlohmann::json::parse(first.manifest_json);
  CHECK(manifest["command"] == "fedrep");
  CHECK(manifest["checks_pass"] == true);
  const ExperimentConfig snapshot =
      parse_config_text(manifest["config"].get<std::string>());
  CHECK(snapshot.n == config.n);
  CHECK(snapshot.rounds == config.rounds);
}

TEST_CASE("thread count does not change the experiment csv") {
  ExperimentConfig config;
  config.command = "fedrep";
  config.n = 16;
  config.d = 6;
  config.k = 2;
  config.m = 5;
  config.r = 0.5;
  config.rounds = 8;
  config.seed = 9;
  config.threads = 1;
  const std::string serial = run_experiment(config).csv;
  config.threads = 3;
  const std::string threaded = run_experiment(config).csv;
  CHECK(serial == threaded);
}

TEST_CASE("fullmeas command honors the theorem check flag") {
  ExperimentConfig config;
  config.command = "fullmeas";
  config.n = 12;
  config.d = 8;
  config.k = 2;
  config.rounds = 30;
  config.seed = 3;
  config.check_theorem = true;
  const RunOutput output = run_experiment(config);
  CHECK(output.csv.find("kind,fullmeas") != std::string::npos);
  const nlohmann::json manifest = nlohmann::json::parse(output.manifest_json);
  CHECK(manifest["checks"].contains("fullmeas_theorem"));
}

TEST_CASE("baseline and newclient commands emit their schemas") {
  ExperimentConfig config;
  config.command = "baseline";
  config.algo = "global";
  config.n = 10;
  config.d = 6;
  config.k = 2;
  config.rounds = 2;
  config.seed = 4;
  const RunOutput global_out = run_experiment(config);
  CHECK(global_out.csv.find("kind,baseline") != std::string::npos);
  CHECK(global_out.csv.find("algo,round,dist") != std::string::npos);
  CHECK(global_out.csv.find("global,0,nan,") != std::string::npos);

  config.algo = "local";
  config.m = 4;
  config.rounds = 4;
  const RunOutput local_out = run_experiment(config);
  CHECK(local_out.csv.find("local,0,nan,") != std::string::npos);
  CHECK(local_out.csv.find("local,3,nan,") != std::string::npos);

  config.command = "newclient";
  config.algo = "fedrep";
  config.m = 5;
  config.rounds = 10;
  config.m_new = 2;
  config.test_size = 200;
  config.replicates = 3;
  const RunOutput nc = run_experiment(config);
  CHECK(nc.csv.find("kind,newclient") != std::string::npos);
  CHECK(nc.csv.find("summary,median,2,") != std::string::npos);
}

TEST_CASE("run output lands atomically next to the manifest") {
  const auto dir = std::filesystem::temp_directory_path() / "fedrep_lab_test";
  std::filesystem::create_directories(dir);
  ExperimentConfig config;
  config.command = "fedrep";
  config.n = 8;
  config.d = 5;
  config.k = 2;
  config.m = 4;
  config.r = 0.5;
  config.rounds = 3;
  config.out = (dir / "trace.csv").string();
  const RunOutput output = run_experiment(config);
  write_run_output(config, output);
  CHECK(std::filesystem::exists(dir / "trace.csv"));
  CHECK(std::filesystem::exists(dir / "trace.csv.manifest.json"));
  CHECK_FALSE(std::filesystem::exists(dir / "trace.csv.tmp"));
  std::ifstream file(dir / "trace.csv", std::ios::binary);
  std::stringstream content;
  content << file.rdbuf();
  CHECK(content.str() == output.csv);
  std::filesystem::remove_all(dir);
}

TEST_CASE("format_double survives a parse round trip") {
  for (const double x : {1.0 / 3.0, 1e-300, 0.0, -1.0, 123456789.123456789}) {
    const std::string text = format_double(x);
    CHECK(std::strtod(text.c_str(), nullptr) == x);
  }
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("median handles odd and even counts") {
  CHECK(median_of({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median_of({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("plot script names the output and reads the schema") {
  ExperimentConfig config;
  config.out = "demo.csv";
  const std::string script = plot_script_for(config);
  CHECK(script.find("matplotlib") != std::string::npos);
  CHECK(script.find("demo.csv") != std::string::npos);
  CHECK(script.find("replicate") != std::string::npos);
}
