#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pct/io.hpp"

namespace pct::app {

namespace {

struct KeySpec {
  const char* section;
  const char* key;
};

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> t{
      {"geometry", "n_pixels"},        {"geometry", "pixel_size_m"},
      {"geometry", "detector_pixel_size_m"},
      {"geometry", "energy_keV"},      {"geometry", "wavelength_m"},
      {"geometry", "distance_m"},      {"geometry", "detector_pixels"},
      {"geometry", "n_angles"},        {"geometry", "photons_n0"},
      {"geometry", "seed"},            {"geometry", "full_scale"},
      {"phantom", "background"},       {"phantom", "grain_a"},
      {"phantom", "grain_b"},          {"phantom", "n_grains"},
      {"phantom", "phantom_seed"},
      {"reconstruction", "sigma"},     {"reconstruction", "alpha_tsd"},
      {"reconstruction", "alpha_acd"}, {"reconstruction", "alpha_center"},
      {"reconstruction", "alpha_grid_points"},
      {"reconstruction", "epsilon"},   {"reconstruction", "zero_dc"},
      {"reconstruction", "tau"},       {"reconstruction", "max_iters"},
      {"reconstruction", "adaptive"},  {"reconstruction", "add_noise"},
      {"sweep", "n0_list"},
  };
  return t;
}

const KeySpec* find_key(const std::string& key) {
  for (const KeySpec& k : key_table())
    if (key == k.key) return &k;
  return nullptr;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& what) {
  throw std::invalid_argument("config key '" + key + "': " + what + ", got '" +
                              value + "'");
}

std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && ws(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && ws(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (trim(v.substr(pos)).empty() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  bad_value(key, v, "expected a finite number");
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (trim(v.substr(pos)).empty()) return i;
  } catch (const std::exception&) {
  }
  bad_value(key, v, "expected an integer");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "expected true or false");
}

double positive(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (!(d > 0.0)) bad_value(key, v, "must be > 0");
  return d;
}

Material material(const std::string& key, const std::string& v) {
  try {
    return find_material(v);
  } catch (const std::invalid_argument&) {
    bad_value(key, v, "unknown material");
  }
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(positive(key, trim(item)));
  if (out.empty()) bad_value(key, v, "expected a comma-separated list");
  return out;
}

std::string list_text(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + io::format_double(v[i]);
  return s;
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const KeySpec& s : key_table()) k.emplace_back(s.key);
    return k;
  }();
  return keys;
}

KeyValues parse_ini(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  KeyValues out;
  auto add = [&](const std::string& section, const std::string& key,
                 const std::string& value) {
    const KeySpec* k = find_key(key);
    if (!k)
      throw std::invalid_argument("config: unknown key '" +
                                  (section.empty() ? key : section + "." + key) + "'");
    if (!section.empty() && section != k->section)
      throw std::invalid_argument("config: key '" + key + "' belongs in [" +
                                  k->section + "], found in [" + section + "]");
    if (out.contains(key))
      throw std::invalid_argument("config: key '" + key + "' given twice");
    out[key] = trim(value);
  };
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      add("", name, node.data());
      continue;
    }
    const bool known_section = std::ranges::any_of(
        key_table(), [&](const KeySpec& k) { return name == k.section; });
    if (!known_section)
      throw std::invalid_argument("config: unknown section [" + name + "]");
    for (const auto& [key, leaf] : node) add(name, key, leaf.data());
  }
  return out;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read config '" + path.string() + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  if (path.extension() != ".json") return parse_ini(buf.str());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("manifest '" + path.string() + "': " + e.what());
  }
  if (!j.contains("config") || !j["config"].is_object())
    throw std::invalid_argument("manifest '" + path.string() + "' has no config object");
  KeyValues out;
  for (const auto& [k, v] : j["config"].items()) {
    if (!find_key(k)) throw std::invalid_argument("manifest: unknown key '" + k + "'");
    out[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return out;
}

RunConfig build_config(const KeyValues& kv, const Overrides& ov) {
  for (const auto& [k, v] : kv)
    if (!find_key(k)) throw std::invalid_argument("config: unknown key '" + k + "'");
  auto has = [&](const char* k) { return kv.contains(k); };
  auto val = [&](const char* k) { return kv.at(k); };

  RunConfig rc;
  rc.full_scale = ov.full_scale || (has("full_scale") && to_bool("full_scale", val("full_scale")));
  ExperimentSpec& s = rc.spec;
  ScanGeometry& g = s.geometry;
  g = rc.full_scale ? full_scale_geometry() : desk_geometry();

  if (has("n_pixels")) {
    const long long n = to_int("n_pixels", val("n_pixels"));
    if (n < 1 || n > 1 << 15) bad_value("n_pixels", val("n_pixels"), "out of range");
    if (n != g.n_pixels && !has("detector_pixels"))
      g.n_detector = default_detector_pixels(static_cast<int>(n));
    g.n_pixels = static_cast<int>(n);
  }
  if (has("pixel_size_m")) {
    g.object_pixel_size = positive("pixel_size_m", val("pixel_size_m"));
    g.detector_pixel_size = g.object_pixel_size;
  }
  if (has("detector_pixel_size_m"))
    g.detector_pixel_size = positive("detector_pixel_size_m", val("detector_pixel_size_m"));
  if (has("energy_keV") && has("wavelength_m"))
    throw std::invalid_argument("config: give either 'energy_keV' or 'wavelength_m', not both");
  if (has("energy_keV"))
    g.wavelength = wavelength_from_energy_kev(positive("energy_keV", val("energy_keV")));
  if (has("wavelength_m")) g.wavelength = positive("wavelength_m", val("wavelength_m"));
  if (has("distance_m")) {
    g.distance = to_double("distance_m", val("distance_m"));
    if (g.distance < 0.0) bad_value("distance_m", val("distance_m"), "must be >= 0");
  }
  if (has("detector_pixels")) {
    const long long m = to_int("detector_pixels", val("detector_pixels"));
    if (m < 1 || m > 1 << 20) bad_value("detector_pixels", val("detector_pixels"), "out of range");
    g.n_detector = static_cast<int>(m);
  }
  if (has("n_angles")) {
    const long long a = to_int("n_angles", val("n_angles"));
    if (a < 1 || a > 1 << 16) bad_value("n_angles", val("n_angles"), "out of range");
    g.angles_deg = uniform_angles(static_cast<int>(a));
  }
  if (has("photons_n0")) g.photons_n0 = positive("photons_n0", val("photons_n0"));
  if (has("seed")) s.noise_seed = static_cast<std::uint64_t>(to_int("seed", val("seed")));
  if (ov.seed) s.noise_seed = *ov.seed;
  g.rng_seed = s.noise_seed;

  if (has("background")) s.phantom.background = material("background", val("background"));
  if (has("grain_a")) s.phantom.grain_a = material("grain_a", val("grain_a"));
  if (has("grain_b")) s.phantom.grain_b = material("grain_b", val("grain_b"));
  if (has("n_grains")) {
    const long long n = to_int("n_grains", val("n_grains"));
    if (n < 2) bad_value("n_grains", val("n_grains"), "must be >= 2");
    s.phantom.n_grains = static_cast<int>(n);
  }
  if (has("phantom_seed"))
    s.phantom.seed = static_cast<std::uint64_t>(to_int("phantom_seed", val("phantom_seed")));

  if (has("sigma") && val("sigma") != "auto") {
    s.sigma_rule = SigmaRule::explicit_value;
    s.sigma_value = to_double("sigma", val("sigma"));
  }
  if (has("alpha_tsd")) s.alpha_tsd = positive("alpha_tsd", val("alpha_tsd"));
  if (has("alpha_acd")) s.alpha_acd = positive("alpha_acd", val("alpha_acd"));
  if (has("alpha_center")) s.alpha_center = positive("alpha_center", val("alpha_center"));
  if (has("alpha_grid_points")) {
    const long long n = to_int("alpha_grid_points", val("alpha_grid_points"));
    if (n < 1 || n > 64) bad_value("alpha_grid_points", val("alpha_grid_points"), "out of range");
    s.alpha_grid_points = static_cast<int>(n);
  }
  if (has("epsilon")) {
    s.epsilon = to_double("epsilon", val("epsilon"));
    if (s.epsilon < 0.0) bad_value("epsilon", val("epsilon"), "must be >= 0");
  }
  if (has("zero_dc")) s.zero_dc = to_bool("zero_dc", val("zero_dc"));
  if (has("add_noise")) s.add_noise = to_bool("add_noise", val("add_noise"));
  if (has("tau")) s.solver.tau_tol = positive("tau", val("tau"));
  if (has("max_iters")) {
    const long long n = to_int("max_iters", val("max_iters"));
    if (n < 1) bad_value("max_iters", val("max_iters"), "must be >= 1");
    s.solver.max_iters = static_cast<int>(n);
  }
  if (ov.max_iters) {
    if (*ov.max_iters < 1) throw std::invalid_argument("--max-iters must be >= 1");
    s.solver.max_iters = *ov.max_iters;
  }
  if (has("adaptive")) s.solver.adapt.enabled = to_bool("adaptive", val("adaptive"));
  if (has("n0_list")) rc.n0_list = to_list("n0_list", val("n0_list"));

  g.validate();
  resolve_sigma(s);
  return rc;
}

RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const Overrides& ov) {
  return build_config(path ? read_config_file(*path) : KeyValues{}, ov);
}

KeyValues RunConfig::resolved() const {
  using io::format_double;
  const ExperimentSpec& s = spec;
  const ScanGeometry& g = s.geometry;
  KeyValues kv;
  kv["n_pixels"] = std::to_string(g.n_pixels);
  kv["pixel_size_m"] = format_double(g.object_pixel_size);
  kv["detector_pixel_size_m"] = format_double(g.detector_pixel_size);
  kv["wavelength_m"] = format_double(g.wavelength);
  kv["distance_m"] = format_double(g.distance);
  kv["detector_pixels"] = std::to_string(g.n_detector);
  kv["n_angles"] = std::to_string(g.n_angles());
  kv["photons_n0"] = format_double(g.photons_n0);
  kv["seed"] = std::to_string(s.noise_seed);
  kv["full_scale"] = full_scale ? "true" : "false";
  kv["background"] = s.phantom.background.name;
  kv["grain_a"] = s.phantom.grain_a.name;
  kv["grain_b"] = s.phantom.grain_b.name;
  kv["n_grains"] = std::to_string(s.phantom.n_grains);
  kv["phantom_seed"] = std::to_string(s.phantom.seed);
  kv["sigma"] = s.sigma_rule == SigmaRule::explicit_value ? format_double(s.sigma_value)
                                                          : "auto";
  if (s.alpha_tsd) kv["alpha_tsd"] = format_double(*s.alpha_tsd);
  if (s.alpha_acd) kv["alpha_acd"] = format_double(*s.alpha_acd);
  kv["alpha_center"] = format_double(s.alpha_center);
  kv["alpha_grid_points"] = std::to_string(s.alpha_grid_points);
  kv["epsilon"] = format_double(s.epsilon);
  kv["zero_dc"] = s.zero_dc ? "true" : "false";
  kv["add_noise"] = s.add_noise ? "true" : "false";
  kv["tau"] = format_double(s.solver.tau_tol);
  kv["max_iters"] = std::to_string(s.solver.max_iters);
  kv["adaptive"] = s.solver.adapt.enabled ? "true" : "false";
  kv["n0_list"] = list_text(n0_list);
  return kv;
}

}  // namespace pct::app
