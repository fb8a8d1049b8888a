#include "scar/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "scar/errors.hpp"

namespace scar {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

float to_float(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    float f = std::stof(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return f;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    uint64_t x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::vector<int64_t> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int64_t> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(to_long(key, trim(tok)));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
  return out;
}

std::string fmt_float(float v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

}  // namespace

float parse_eps(const std::string& text) {
  const std::string v = trim(text);
  const auto slash = v.find('/');
  if (slash != std::string::npos) {
    const float num = to_float("eps", v.substr(0, slash));
    const float den = to_float("eps", v.substr(slash + 1));
    if (den <= 0.0f) throw ConfigError("eps: fraction denominator must be > 0");
    return num / den;
  }
  return to_float("eps", v);
}

std::vector<float> parse_eps_list(const std::string& text) {
  std::vector<float> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const std::string t = trim(tok);
    if (!t.empty()) out.push_back(parse_eps(t));
  }
  if (out.empty()) throw ConfigError("eps list is empty");
  return out;
}

void ExperimentConfig::validate() const {
  if (dataset.generator != "two_moons" && dataset.generator != "blobs" && dataset.generator != "csv")
    throw ConfigError("dataset.generator: unknown generator '" + dataset.generator + "'");
  if (dataset.generator == "csv" && dataset.csv_path.empty())
    throw ConfigError("dataset.csv_path: required when generator = csv");
  if (dataset.generator != "csv") {
    if (dataset.n < 2) throw ConfigError("dataset.n: must be >= 2");
    if (dataset.n_test < 1) throw ConfigError("dataset.n_test: must be >= 1");
  }
  if (dataset.n_l < 1) throw ConfigError("dataset.n_l: must be >= 1");
  if (model.hidden.empty()) throw ConfigError("model.hidden: at least one hidden layer");
  for (int64_t h : model.hidden)
    if (h < 1) throw ConfigError("model.hidden: sizes must be positive");
  try {
    method.validate();
  } catch (const ValueError& e) {
    throw ConfigError(std::string("method: ") + e.what());
  }
  try {
    attack.validate();
  } catch (const ValueError& e) {
    throw ConfigError(std::string("attack: ") + e.what());
  }
  try {
    train.validate();
  } catch (const ValueError& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  if (out_dir.empty()) throw ConfigError("output.dir: must not be empty");
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::set<std::string> seen;
  size_t lineno = 0;

  const std::set<std::string> sections = {"dataset", "model",  "method", "augment",
                                          "attack",  "train",  "scar",   "output"};

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ": line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section))
        throw ConfigError(origin + ": line " + std::to_string(lineno) + ": unknown section [" +
                          section + "]");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ": line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError(origin + ": line " + std::to_string(lineno) + ": key '" + key +
                        "' outside any [section]");
    const std::string full = section + "." + key;
    if (!seen.insert(full).second)
      throw ConfigError(origin + ": line " + std::to_string(lineno) + ": duplicate key " + full);

    if (full == "dataset.generator") cfg.dataset.generator = val;
    else if (full == "dataset.n") cfg.dataset.n = static_cast<size_t>(to_long(full, val));
    else if (full == "dataset.noise") cfg.dataset.noise = to_float(full, val);
    else if (full == "dataset.n_l") cfg.dataset.n_l = static_cast<size_t>(to_long(full, val));
    else if (full == "dataset.n_test") cfg.dataset.n_test = static_cast<size_t>(to_long(full, val));
    else if (full == "dataset.classes") cfg.dataset.classes = static_cast<int>(to_long(full, val));
    else if (full == "dataset.spread") cfg.dataset.spread = to_float(full, val);
    else if (full == "dataset.csv_path") cfg.dataset.csv_path = val;
    else if (full == "dataset.csv_test_path") cfg.dataset.csv_test_path = val;
    else if (full == "model.hidden") cfg.model.hidden = to_int_list(full, val);
    else if (full == "model.seed") cfg.model.seed = to_u64(full, val);
    else if (full == "method.name") cfg.method.kind = method_from_name(val).kind;
    else if (full == "method.lambda") cfg.method.lambda = to_float(full, val);
    else if (full == "method.eps_vat") cfg.method.eps_vat = to_float(full, val);
    else if (full == "method.xi") cfg.method.xi = to_float(full, val);
    else if (full == "method.power_iters") cfg.method.power_iters = static_cast<int>(to_long(full, val));
    else if (full == "method.k_aug") cfg.method.k_aug = static_cast<int>(to_long(full, val));
    else if (full == "method.t_sharp") cfg.method.t_sharp = to_float(full, val);
    else if (full == "method.alpha_mix") cfg.method.alpha_mix = to_float(full, val);
    else if (full == "method.tau") cfg.method.tau = to_float(full, val);
    else if (full == "augment.weak_noise") cfg.method.aug.weak_noise = to_float(full, val);
    else if (full == "augment.strong_noise") cfg.method.aug.strong_noise = to_float(full, val);
    else if (full == "augment.strong_dropout") cfg.method.aug.strong_dropout = to_float(full, val);
    else if (full == "attack.kind") {
      if (val == "fgsm") cfg.attack.kind = AttackKind::Fgsm;
      else if (val == "pgd") cfg.attack.kind = AttackKind::Pgd;
      else throw ConfigError(full + ": expected fgsm or pgd, got '" + val + "'");
    }
    else if (full == "attack.eps") cfg.attack.eps = parse_eps(val);
    else if (full == "attack.alpha") cfg.attack.alpha = parse_eps(val);
    else if (full == "attack.steps") cfg.attack.steps = static_cast<int>(to_long(full, val));
    else if (full == "train.epochs") cfg.train.epochs = static_cast<int>(to_long(full, val));
    else if (full == "train.batch_size") cfg.train.batch_size = static_cast<int>(to_long(full, val));
    else if (full == "train.batches_per_epoch")
      cfg.train.batches_per_epoch = static_cast<int>(to_long(full, val));
    else if (full == "train.lr") cfg.train.lr = to_float(full, val);
    else if (full == "train.momentum") cfg.train.momentum = to_float(full, val);
    else if (full == "scar.reselect_each_epoch") cfg.reselect_each_epoch = to_bool(full, val);
    else if (full == "output.dir") cfg.out_dir = val;
    else
      throw ConfigError(origin + ": line " + std::to_string(lineno) + ": unknown key " + full);
  }

  // Attack alpha defaults to eps when unset (single FGSM-sized step).
  if (cfg.attack.alpha <= 0.0f) cfg.attack.alpha = cfg.attack.eps > 0.0f ? cfg.attack.eps : 1.0f;
  cfg.train.seed = cfg.model.seed;
  cfg.validate();
  return cfg;
}

void apply_seed_overrides(ExperimentConfig& cfg, const std::string& flag_seed) {
  const char* env = std::getenv("SCAR_SEED");
  if (env != nullptr && *env != '\0') cfg.model.seed = to_u64("SCAR_SEED", env);
  if (!flag_seed.empty()) cfg.model.seed = to_u64("--seed", flag_seed);
  cfg.train.seed = cfg.model.seed;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "[dataset]\n";
  os << "generator = " << cfg.dataset.generator << "\n";
  if (cfg.dataset.generator == "csv") {
    os << "csv_path = " << cfg.dataset.csv_path << "\n";
    if (!cfg.dataset.csv_test_path.empty())
      os << "csv_test_path = " << cfg.dataset.csv_test_path << "\n";
  } else {
    os << "n = " << cfg.dataset.n << "\n";
    os << "noise = " << fmt_float(cfg.dataset.noise) << "\n";
    os << "n_test = " << cfg.dataset.n_test << "\n";
    if (cfg.dataset.generator == "blobs") {
      os << "classes = " << cfg.dataset.classes << "\n";
      os << "spread = " << fmt_float(cfg.dataset.spread) << "\n";
    }
  }
  os << "n_l = " << cfg.dataset.n_l << "\n";
  os << "\n[model]\n";
  os << "hidden = ";
  for (size_t i = 0; i < cfg.model.hidden.size(); ++i) {
    if (i) os << ",";
    os << cfg.model.hidden[i];
  }
  os << "\n";
  os << "seed = " << cfg.model.seed << "\n";
  os << "\n[method]\n";
  os << "name = " << cfg.method.name() << "\n";
  os << "lambda = " << fmt_float(cfg.method.lambda) << "\n";
  switch (cfg.method.kind) {
    case MethodKind::VatLite:
      os << "eps_vat = " << fmt_float(cfg.method.eps_vat) << "\n";
      os << "xi = " << fmt_float(cfg.method.xi) << "\n";
      os << "power_iters = " << cfg.method.power_iters << "\n";
      break;
    case MethodKind::MixMatchLite:
      os << "k_aug = " << cfg.method.k_aug << "\n";
      os << "t_sharp = " << fmt_float(cfg.method.t_sharp) << "\n";
      os << "alpha_mix = " << fmt_float(cfg.method.alpha_mix) << "\n";
      break;
    case MethodKind::FixMatchLite:
      os << "tau = " << fmt_float(cfg.method.tau) << "\n";
      break;
    case MethodKind::Supervised:
      break;
  }
  os << "\n[augment]\n";
  os << "weak_noise = " << fmt_float(cfg.method.aug.weak_noise) << "\n";
  os << "strong_noise = " << fmt_float(cfg.method.aug.strong_noise) << "\n";
  os << "strong_dropout = " << fmt_float(cfg.method.aug.strong_dropout) << "\n";
  os << "\n[attack]\n";
  os << "kind = " << (cfg.attack.kind == AttackKind::Fgsm ? "fgsm" : "pgd") << "\n";
  os << "eps = " << fmt_float(cfg.attack.eps) << "\n";
  os << "alpha = " << fmt_float(cfg.attack.alpha) << "\n";
  os << "steps = " << cfg.attack.steps << "\n";
  os << "\n[train]\n";
  os << "epochs = " << cfg.train.epochs << "\n";
  os << "batch_size = " << cfg.train.batch_size << "\n";
  os << "batches_per_epoch = " << cfg.train.batches_per_epoch << "\n";
  os << "lr = " << fmt_float(cfg.train.lr) << "\n";
  os << "momentum = " << fmt_float(cfg.train.momentum) << "\n";
  os << "\n[scar]\n";
  os << "reselect_each_epoch = " << (cfg.reselect_each_epoch ? "true" : "false") << "\n";
  os << "\n[output]\n";
  os << "dir = " << cfg.out_dir << "\n";
  return os.str();
}

}  // namespace scar
