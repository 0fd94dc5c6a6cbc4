#include "membrane/energy.hpp"
#include "membrane/lab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace membrane::lab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  auto plain = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v))
      throw std::invalid_argument("key '" + key + "': not a number: '" + text + "'");
    return v;
  };
  if (const auto slash = t.find('/'); slash != std::string::npos) {
    const double q = plain(trim(t.substr(slash + 1)));
    if (q == 0.0) throw std::invalid_argument("key '" + key + "': zero denominator");
    return plain(trim(t.substr(0, slash))) / q;
  }
  if (const auto caret = t.find('^'); caret != std::string::npos)
    return std::pow(plain(trim(t.substr(0, caret))), plain(trim(t.substr(caret + 1))));
  return plain(t);
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(parse_number(key, item));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
  return s;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "experiment", "dim",     "spacing",  "half_width", "profile", "amplitude", "perturbation",
      "phi_a0",     "phi_cos", "phi_sin",  "psi_a0",     "psi_cos", "psi_sin",   "radii",
      "inner_radius", "seed",  "draws",    "output"};
  return keys;
}

struct Defaults {
  int dim;
  double spacing;
  std::string profile;
  double amplitude;
  std::string perturbation;
  std::vector<double> radii;
  bool planar_only;
};

Defaults defaults_for(const std::string& name, int dim) {
  if (name == "energy-table") return {2, default_table_spacing(dim), "sh", 0.0, "none", {1.0}, false};
  if (name == "clog-width") return {2, 1.0 / 256.0, "sh", 0.25, "random", {1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4}, true};
  if (name == "generic-regular")
    return {2, 1.0 / 256.0, "sh", 0.25, "balanced", {1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4}, true};
  if (name == "sing1-instability") return {2, 1.0 / 128.0, "uh", 0.25, "balanced", {1.0 / 16}, true};
  if (name == "monneau-sing2") return {2, 1.0 / 64.0, "parabola", 0.0, "none", {0.125, 0.25, 0.375, 0.5, 0.75}, false};
  if (name == "obstacle-flatness")
    return {2, 1.0 / 128.0, "sh", 0.25, "balanced", {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2}, true};
  if (name == "aux-function") return {2, 1.0 / 64.0, "none", 0.0, "none", {1.0 / 16, 1.0 / 8, 1.0 / 4}, false};
  throw std::logic_error("no defaults for " + name);
}

}  // namespace

std::vector<std::string> registered_experiments() {
  return {"energy-table", "clog-width", "generic-regular", "sing1-instability",
          "monneau-sing2", "obstacle-flatness", "aux-function"};
}

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("line " + std::to_string(lineno) + ": empty key");
    if (out.count(key)) throw std::invalid_argument("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ExperimentConfig resolve_config(const std::map<std::string, std::string>& raw) {
  const auto& keys = known_keys();
  for (const auto& [k, v] : raw)
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw std::invalid_argument("unknown key '" + k + "'");
  auto get = [&](const std::string& k) -> const std::string* {
    const auto it = raw.find(k);
    return it == raw.end() ? nullptr : &it->second;
  };
  ExperimentConfig c;
  const auto names = registered_experiments();
  if (!get("experiment")) throw std::invalid_argument("missing key 'experiment'");
  c.experiment = *get("experiment");
  if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown experiment '" + c.experiment + "'; registered: " + list);
  }
  auto number = [&](const std::string& k, double fallback) { return get(k) ? parse_number(k, *get(k)) : fallback; };
  auto integer = [&](const std::string& k, long long fallback) {
    const double v = number(k, static_cast<double>(fallback));
    if (v != std::floor(v)) throw std::invalid_argument("key '" + k + "' must be an integer");
    return static_cast<long long>(v);
  };

  const double dim = number("dim", defaults_for(c.experiment, 2).dim);
  if (dim != 1.0 && dim != 2.0) throw std::invalid_argument("key 'dim' must be 1 or 2");
  c.dim = static_cast<int>(dim);
  const Defaults d = defaults_for(c.experiment, c.dim);
  if (d.planar_only && c.dim != 2) throw std::invalid_argument("experiment '" + c.experiment + "' needs dim = 2");
  if (c.experiment == "aux-function") c.dim = 2;

  c.half_width = number("half_width", 1.0);
  if (!(c.half_width > 0.0)) throw std::invalid_argument("key 'half_width' must be positive");
  c.spacing = number("spacing", d.spacing);
  try {
    Lattice probe(c.dim, c.half_width, c.spacing);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("key 'spacing': ") + e.what());
  }

  c.profile = get("profile") ? *get("profile") : d.profile;
  static const std::set<std::string> profiles{"sh", "uh", "parabola", "none"};
  if (!profiles.count(c.profile)) throw std::invalid_argument("key 'profile' must be sh, uh, parabola or none");

  c.amplitude = number("amplitude", d.amplitude);
  if (!(c.amplitude >= 0.0)) throw std::invalid_argument("key 'amplitude' must be non-negative");

  c.perturbation = get("perturbation") ? *get("perturbation") : d.perturbation;
  static const std::set<std::string> kinds{"none", "fourier", "balanced", "split", "random"};
  if (!kinds.count(c.perturbation))
    throw std::invalid_argument("key 'perturbation' must be none, fourier, balanced, split or random");
  const bool has_series = get("phi_a0") || get("phi_cos") || get("phi_sin") || get("psi_a0") || get("psi_cos") || get("psi_sin");
  if (has_series && c.perturbation != "fourier")
    throw std::invalid_argument("phi_* / psi_* keys need perturbation = fourier");
  c.phi.a0 = number("phi_a0", 0.0);
  c.psi.a0 = number("psi_a0", 0.0);
  if (get("phi_cos")) c.phi.a = parse_list("phi_cos", *get("phi_cos"));
  if (get("phi_sin")) c.phi.b = parse_list("phi_sin", *get("phi_sin"));
  if (get("psi_cos")) c.psi.a = parse_list("psi_cos", *get("psi_cos"));
  if (get("psi_sin")) c.psi.b = parse_list("psi_sin", *get("psi_sin"));

  c.radii = get("radii") ? parse_list("radii", *get("radii")) : d.radii;
  if (c.radii.empty()) throw std::invalid_argument("key 'radii' is empty");
  for (double r : c.radii)
    if (!(r > 0.0)) throw std::invalid_argument("key 'radii' must hold positive values");

  c.inner_radius = number("inner_radius", 0.25);
  if (!(c.inner_radius > 0.0 && c.inner_radius < c.half_width))
    throw std::invalid_argument("key 'inner_radius' must lie in (0, half_width)");
  const long long seed = integer("seed", c.experiment == "energy-table" ? 7 : 1);
  if (seed < 0) throw std::invalid_argument("key 'seed' must be non-negative");
  c.seed = static_cast<unsigned long long>(seed);
  c.draws = static_cast<int>(integer("draws", 5));
  if (c.draws < 1) throw std::invalid_argument("key 'draws' must be at least 1");
  if (get("output")) c.output = *get("output");
  if (c.output.empty()) throw std::invalid_argument("key 'output' is empty");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
  return resolve_config(parse_key_values(in));
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  return {{"experiment", experiment},
          {"dim", std::to_string(dim)},
          {"spacing", format_number(spacing)},
          {"half_width", format_number(half_width)},
          {"profile", profile},
          {"amplitude", format_number(amplitude)},
          {"perturbation", perturbation},
          {"phi_a0", format_number(phi.a0)},
          {"phi_cos", join(phi.a)},
          {"phi_sin", join(phi.b)},
          {"psi_a0", format_number(psi.a0)},
          {"psi_cos", join(psi.a)},
          {"psi_sin", join(psi.b)},
          {"radii", join(radii)},
          {"inner_radius", format_number(inner_radius)},
          {"seed", std::to_string(seed)},
          {"draws", std::to_string(draws)},
          {"output", output}};
}

}  // namespace membrane::lab
