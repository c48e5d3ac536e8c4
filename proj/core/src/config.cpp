#include "snnc/config.hpp"

#include <fstream>
#include <sstream>

#include "snnc/errors.hpp"

namespace snnc {

CompressMode parse_mode(const std::string& name) {
  if (name == "none") return CompressMode::kNone;
  if (name == "prune") return CompressMode::kPrune;
  if (name == "quantize") return CompressMode::kQuantize;
  if (name == "regularize") return CompressMode::kRegularize;
  if (name == "prune+quantize") return CompressMode::kPruneQuantize;
  if (name == "prune+regularize") return CompressMode::kPruneRegularize;
  if (name == "quantize+regularize") return CompressMode::kQuantizeRegularize;
  if (name == "all") return CompressMode::kAll;
  throw ConfigError("unknown compression mode: " + name);
}

std::string mode_name(CompressMode mode) {
  switch (mode) {
    case CompressMode::kNone: return "none";
    case CompressMode::kPrune: return "prune";
    case CompressMode::kQuantize: return "quantize";
    case CompressMode::kRegularize: return "regularize";
    case CompressMode::kPruneQuantize: return "prune+quantize";
    case CompressMode::kPruneRegularize: return "prune+regularize";
    case CompressMode::kQuantizeRegularize: return "quantize+regularize";
    case CompressMode::kAll: return "all";
  }
  return "?";
}

bool mode_prunes(CompressMode m) {
  return m == CompressMode::kPrune || m == CompressMode::kPruneQuantize ||
         m == CompressMode::kPruneRegularize || m == CompressMode::kAll;
}

bool mode_quantizes(CompressMode m) {
  return m == CompressMode::kQuantize || m == CompressMode::kPruneQuantize ||
         m == CompressMode::kQuantizeRegularize || m == CompressMode::kAll;
}

bool mode_regularizes(CompressMode m) {
  return m == CompressMode::kRegularize ||
         m == CompressMode::kPruneRegularize ||
         m == CompressMode::kQuantizeRegularize || m == CompressMode::kAll;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

void ExperimentConfig::apply_override(const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like key=value: " + kv);
  std::string key = trim(kv.substr(0, eq));
  std::string value = trim(kv.substr(eq + 1));

  auto as_u64 = [&] { return std::stoull(value); };
  auto as_size = [&] { return static_cast<std::size_t>(std::stoull(value)); };
  auto as_int = [&] { return std::stoi(value); };
  auto as_double = [&] { return std::stod(value); };
  auto as_bool = [&] {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("boolean key " + key + " wants true/false: " + value);
  };

  try {
    if (key == "arch") arch = value;
    else if (key == "dataset") dataset = value;
    else if (key == "data_dir") data_dir = value;
    else if (key == "out_dir") out_dir = value;
    else if (key == "seed") seed = as_u64();
    else if (key == "mode") mode = parse_mode(value);
    else if (key == "scope") {
      if (value == "auto") scope = CompressScope::kAuto;
      else if (value == "all") scope = CompressScope::kAll;
      else if (value == "interior") scope = CompressScope::kInterior;
      else throw ConfigError("scope wants auto|all|interior: " + value);
    }
    else if (key == "u_th") lif.u_th = as_double();
    else if (key == "decay") lif.decay = as_double();
    else if (key == "surrogate_width") lif.surrogate_width = as_double();
    else if (key == "timesteps" || key == "T") timesteps = as_size();
    else if (key == "epochs_pretrain") epochs_pretrain = as_size();
    else if (key == "epochs_admm") epochs_admm = as_size();
    else if (key == "epochs_hard") epochs_hard = as_size();
    else if (key == "batch_size") batch_size = as_size();
    else if (key == "learning_rate") learning_rate = as_double();
    else if (key == "lambda") lambda = as_double();
    else if (key == "sparsity") sparsity = as_double();
    else if (key == "bits") bits = as_int();
    else if (key == "quant_iterations") quant_iterations = as_int();
    else if (key == "rho") rho = as_double();
    else if (key == "baseline_bits") baseline_bits = as_int();
    else if (key == "threads") threads = static_cast<unsigned>(as_u64());
    else if (key == "train_limit") train_limit = as_size();
    else if (key == "test_limit") test_limit = as_size();
    else if (key == "synthetic_samples") synthetic_samples = as_size();
    else if (key == "eval_each_epoch") eval_each_epoch = as_bool();
    else throw ConfigError("unknown config key: " + key);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad value for " + key + ": " + value);
  }
}

void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };

  require(dataset == "mnist" || dataset == "synthetic",
          "dataset must be mnist or synthetic, got " + dataset);
  require(timesteps >= 1, "timesteps must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(lambda >= 0.0, "lambda must be >= 0");
  require(lif.decay >= 0.0 && lif.decay <= 1.0, "decay must be in [0,1]");
  require(lif.u_th > 0.0, "u_th must be > 0");
  require(lif.surrogate_width > 0.0, "surrogate_width must be > 0");
  require(baseline_bits >= 1, "baseline_bits must be >= 1");

  if (mode_prunes(mode))
    require(sparsity >= 0.0 && sparsity < 1.0,
            "mode " + mode_name(mode) + " requires sparsity in [0,1)");
  if (mode_quantizes(mode)) {
    require(bits >= 1 && bits <= baseline_bits,
            "mode " + mode_name(mode) + " requires 1 <= bits <= baseline_bits");
    require(quant_iterations >= 1, "quant_iterations must be >= 1");
    require(rho > 0.0, "rho must be > 0");
  }
  if (mode_prunes(mode)) require(rho > 0.0, "rho must be > 0");
  if (mode_regularizes(mode))
    require(lambda > 0.0,
            "mode " + mode_name(mode) + " requires lambda > 0");

  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      config.apply_override(line);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " +
                        e.what());
    }
  }
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace snnc
