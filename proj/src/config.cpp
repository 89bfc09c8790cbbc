#include "fedrep/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fedrep/trace_io.hpp"

namespace fedrep {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const double parsed = std::strtod(value.c_str(), &end);
  if (errno != 0 || end == value.c_str() || *end != '\0') {
    throw ConfigError("key '" + key + "': malformed numeric '" + value + "'");
  }
  return parsed;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long parsed = std::strtoull(value.c_str(), &end, 10);
  if (errno != 0 || end == value.c_str() || *end != '\0' ||
      value.find('-') != std::string::npos) {
    throw ConfigError("key '" + key + "': malformed integer '" + value + "'");
  }
  return parsed;
}

bool parse_on_off(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ConfigError("key '" + key + "': expected on/off, got '" + value + "'");
}

void check_choice(const std::string& key, const std::string& value,
                  std::initializer_list<const char*> allowed) {
  for (const char* choice : allowed) {
    if (value == choice) return;
  }
  throw ConfigError("key '" + key + "': unsupported value '" + value + "'");
}

using Setter =
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"command",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         check_choice(k, v, {"fedrep", "fullmeas", "baseline", "newclient",
                             "verify"});
         c.command = v;
       }},
      {"n", [](ExperimentConfig& c, const std::string& k,
               const std::string& v) { c.n = parse_u64(k, v); }},
      {"d", [](ExperimentConfig& c, const std::string& k,
               const std::string& v) { c.d = parse_u64(k, v); }},
      {"k", [](ExperimentConfig& c, const std::string& k,
               const std::string& v) { c.k = parse_u64(k, v); }},
      {"m", [](ExperimentConfig& c, const std::string& k,
               const std::string& v) { c.m = parse_u64(k, v); }},
      {"r", [](ExperimentConfig& c, const std::string& k,
               const std::string& v) { c.r = parse_double(k, v); }},
      {"eta", [](ExperimentConfig& c, const std::string& k,
                 const std::string& v) { c.eta = parse_double(k, v); }},
      {"rounds", [](ExperimentConfig& c, const std::string& k,
                    const std::string& v) { c.rounds = parse_u64(k, v); }},
      {"seed", [](ExperimentConfig& c, const std::string& k,
                  const std::string& v) { c.seed = parse_u64(k, v); }},
      {"noise_var",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.noise_var = parse_double(k, v);
       }},
      {"ortho", [](ExperimentConfig& c, const std::string& k,
                   const std::string& v) { c.ortho = parse_on_off(k, v); }},
      {"data_mode",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         check_choice(k, v, {"fresh", "fixed"});
         c.data_mode = v;
       }},
      {"grad_mode",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         check_choice(k, v, {"empirical", "population"});
         c.grad_mode = v;
       }},
      {"init",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         check_choice(k, v, {"random", "spectral"});
         c.init = v;
       }},
      {"init_steps",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.init_steps = parse_u64(k, v);
       }},
      {"algo",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         check_choice(k, v, {"fedrep", "gdgd", "10gd", "local", "global"});
         c.algo = v;
       }},
      {"tau", [](ExperimentConfig& c, const std::string& k,
                 const std::string& v) { c.tau = parse_u64(k, v); }},
      {"alpha", [](ExperimentConfig& c, const std::string& k,
                   const std::string& v) { c.alpha = parse_double(k, v); }},
      {"replicates",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.replicates = parse_u64(k, v);
       }},
      {"seed_stride",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.seed_stride = parse_u64(k, v);
       }},
      {"out", [](ExperimentConfig& c, const std::string&,
                 const std::string& v) { c.out = v; }},
      {"m_new", [](ExperimentConfig& c, const std::string& k,
                   const std::string& v) { c.m_new = parse_u64(k, v); }},
      {"test_size",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.test_size = parse_u64(k, v);
       }},
      {"check_theorem",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.check_theorem = parse_on_off(k, v);
       }},
      {"sigma_lo", [](ExperimentConfig& c, const std::string& k,
                      const std::string& v) { c.sigma_lo = parse_double(k, v); }},
      {"sigma_hi", [](ExperimentConfig& c, const std::string& k,
                      const std::string& v) { c.sigma_hi = parse_double(k, v); }},
      {"threads",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.threads = static_cast<unsigned>(parse_u64(k, v));
       }},
  };
  return table;
}

}  // namespace

void apply_config_key(ExperimentConfig& config, const std::string& key,
                      const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  it->second(config, key, value);
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') continue;  // section label
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    apply_config_key(config, trim(line.substr(0, eq)),
                     trim(line.substr(eq + 1)));
  }
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config file " + path);
  std::ostringstream text;
  text << file.rdbuf();
  return parse_config_text(text.str());
}

FedConfig ExperimentConfig::fed_config() const {
  FedConfig fc;
  fc.n = n;
  fc.d = d;
  fc.k = k;
  fc.m = m;
  fc.r = r;
  fc.eta = eta;
  fc.rounds = rounds;
  fc.seed = seed;
  fc.noise_var = noise_var;
  fc.ortho = ortho;
  fc.data_mode = data_mode == "fixed" ? DataMode::kFixed : DataMode::kFresh;
  fc.grad_mode =
      grad_mode == "population" ? GradMode::kPopulation : GradMode::kEmpirical;
  fc.init = init == "spectral" ? InitMode::kSpectral : InitMode::kRandom;
  fc.init_steps = init_steps;
  fc.threads = threads;
  return fc;
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream text;
  text << "command = " << command << "\n";
  text << "n = " << n << "\n";
  text << "d = " << d << "\n";
  text << "k = " << k << "\n";
  text << "m = " << m << "\n";
  text << "r = " << format_double(r) << "\n";
  text << "eta = " << format_double(eta) << "\n";
  text << "rounds = " << rounds << "\n";
  text << "seed = " << seed << "\n";
  text << "noise_var = " << format_double(noise_var) << "\n";
  text << "ortho = " << (ortho ? "on" : "off") << "\n";
  text << "data_mode = " << data_mode << "\n";
  text << "grad_mode = " << grad_mode << "\n";
  text << "init = " << init << "\n";
  text << "init_steps = " << init_steps << "\n";
  text << "algo = " << algo << "\n";
  text << "tau = " << tau << "\n";
  text << "alpha = " << format_double(alpha) << "\n";
  text << "replicates = " << replicates << "\n";
  text << "seed_stride = " << seed_stride << "\n";
  text << "out = " << out << "\n";
  text << "m_new = " << m_new << "\n";
  text << "test_size = " << test_size << "\n";
  text << "check_theorem = " << (check_theorem ? "on" : "off") << "\n";
  text << "sigma_lo = " << format_double(sigma_lo) << "\n";
  text << "sigma_hi = " << format_double(sigma_hi) << "\n";
  text << "threads = " << threads << "\n";
  return text.str();
}

}  // namespace fedrep
