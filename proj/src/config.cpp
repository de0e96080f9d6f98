#include "nonvanish/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace nonvanish {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

using KvMap = std::map<std::string, std::map<std::string, std::string>>;

KvMap tokenize(const std::string& text) {
  KvMap out;
  std::string section;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": malformed table header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("config line " + std::to_string(lineno) + ": empty table name");
      out[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = strip_quotes(trim(line.substr(eq + 1)));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!out[section].emplace(key, value).second)
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key +
                        "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

long long to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + value +
                      "'");
  }
}

std::vector<Vec2> parse_points(const std::string& key, const std::string& value) {
  std::vector<Vec2> pts;
  std::istringstream is(value);
  std::string chunk;
  while (std::getline(is, chunk, ';')) {
    chunk = trim(chunk);
    if (chunk.empty()) continue;
    std::istringstream ps(chunk);
    double x = 0.0, y = 0.0;
    if (!(ps >> x >> y))
      throw ConfigError("config key '" + key + "': expected 'x y' pairs separated by ';'");
    pts.emplace_back(x, y);
  }
  return pts;
}

void reject_unknown(const std::string& section, const std::map<std::string, std::string>& kv,
                    const std::set<std::string>& known) {
  for (const auto& [key, value] : kv) {
    if (!known.count(key))
      throw ConfigError("config: unknown key '" + key + "' in " +
                        (section.empty() ? "the top level" : "[" + section + "]"));
  }
}

void validate(const ScenarioConfig& c) {
  if (!(c.h > 0.0)) throw ConfigError("config: h must be positive");
  if (c.regularity.ell != 0 && c.regularity.ell != 1)
    throw ConfigError("config: regularity.ell must be 0 or 1");
  if (!(c.regularity.alpha > 0.0 && c.regularity.alpha < 1.0))
    throw ConfigError("config: regularity.alpha must lie in (0,1)");
  if (!(c.lambda > 0.0)) throw ConfigError("config: coefficients.lambda must be positive");
  if (c.runge.m < 1) throw ConfigError("config: runge.m must be >= 1");
  if (!(c.runge.r > 0.0)) throw ConfigError("config: runge.r must be positive");
  if (!(c.runge.delta_rel > 0.0)) throw ConfigError("config: runge.delta must be positive");
  if (c.reduction.theta < 0.0) throw ConfigError("config: reduction.theta must be >= 0");
  if (c.reduction.max_tries < 1) throw ConfigError("config: reduction.max_tries must be >= 1");
  if (!(c.reduction.scale0_factor > 0.0))
    throw ConfigError("config: reduction.scale0 must be positive");
  if (!c.preset.empty()) {
    make_preset(c.preset);  // throws on malformed preset names
  } else {
    make_coefficients(c);   // parses the expressions
  }
  if (c.region.kind == RegionDescriptor::Kind::kDisk && !(c.region.radius > 0.0))
    throw ConfigError("config: region.radius must be positive");
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  const KvMap kv = tokenize(text);
  for (const auto& [section, entries] : kv) {
    static const std::set<std::string> sections = {"",          "coefficients", "regularity",
                                                   "region",    "runge",        "reduction"};
    if (!sections.count(section))
      throw ConfigError("config: unknown table [" + section + "]");
    (void)entries;
  }

  ScenarioConfig c;

  if (auto it = kv.find(""); it != kv.end()) {
    reject_unknown("", it->second,
                   {"domain", "h", "constraint", "seed", "output_dir"});
    for (const auto& [key, value] : it->second) {
      if (key == "domain") {
        if (value == "disk")
          c.domain = DomainKind::kDisk;
        else if (value == "square")
          c.domain = DomainKind::kSquare;
        else
          throw ConfigError("config: domain must be 'disk' or 'square'");
      } else if (key == "h") {
        c.h = to_double(key, value);
      } else if (key == "constraint") {
        c.constraint = constraint_from_string(value);
      } else if (key == "seed") {
        c.seed = to_u64(key, value);
      } else if (key == "output_dir") {
        c.output_dir = value;
      }
    }
  }

  if (auto it = kv.find("coefficients"); it != kv.end()) {
    reject_unknown("coefficients", it->second,
                   {"preset", "a11", "a12", "a22", "b1", "b2", "c1", "c2", "q", "lambda"});
    for (const auto& [key, value] : it->second) {
      if (key == "preset")
        c.preset = value;
      else if (key == "lambda") {
        c.lambda = to_double(key, value);
        c.lambda_set = true;
      } else if (key == "a11")
        c.a11 = value;
      else if (key == "a12")
        c.a12 = value;
      else if (key == "a22")
        c.a22 = value;
      else if (key == "b1")
        c.b1 = value;
      else if (key == "b2")
        c.b2 = value;
      else if (key == "c1")
        c.c1 = value;
      else if (key == "c2")
        c.c2 = value;
      else if (key == "q")
        c.q = value;
    }
    if (!c.preset.empty() &&
        !(c.a11.empty() && c.a12.empty() && c.a22.empty() && c.b1.empty() && c.b2.empty() &&
          c.c1.empty() && c.c2.empty() && c.q.empty()))
      throw ConfigError("config: give either coefficients.preset or expression entries, not both");
  }

  if (auto it = kv.find("regularity"); it != kv.end()) {
    reject_unknown("regularity", it->second, {"ell", "alpha"});
    for (const auto& [key, value] : it->second) {
      if (key == "ell") {
        c.regularity.ell = static_cast<int>(to_int(key, value));
        c.ell_set = true;
      } else if (key == "alpha") {
        c.regularity.alpha = to_double(key, value);
        c.alpha_set = true;
      }
    }
  }

  // preset-declared regularity, unless overridden explicitly
  if (!c.preset.empty()) {
    const RegularityClass preset_reg = make_preset(c.preset).regularity;
    if (!c.ell_set) c.regularity.ell = preset_reg.ell;
    if (!c.alpha_set) c.regularity.alpha = preset_reg.alpha;
    if (!c.lambda_set) c.lambda = make_preset(c.preset).lambda_ell;
  }
  if (!c.alpha_set) c.regularity.alpha = c.regularity.ell == 1 ? 0.9 : 0.1;

  if (auto it = kv.find("region"); it != kv.end()) {
    reject_unknown("region", it->second, {"kind", "cx", "cy", "radius", "points"});
    std::string kind = "disk";
    double cx = 0.0, cy = 0.0, radius = 0.0;
    std::vector<Vec2> points;
    for (const auto& [key, value] : it->second) {
      if (key == "kind")
        kind = value;
      else if (key == "cx")
        cx = to_double(key, value);
      else if (key == "cy")
        cy = to_double(key, value);
      else if (key == "radius")
        radius = to_double(key, value);
      else if (key == "points")
        points = parse_points(key, value);
    }
    if (kind == "disk") {
      c.region = RegionDescriptor::disk(Vec2(cx, cy), radius);
    } else if (kind == "polygon") {
      if (points.size() < 3)
        throw ConfigError("config: region.points needs at least 3 'x y' pairs");
      c.region = RegionDescriptor::make_polygon(points);
    } else {
      throw ConfigError("config: region.kind must be 'disk' or 'polygon'");
    }
    c.region_set = true;
  }
  if (!c.region_set) {
    const double r = c.domain == DomainKind::kDisk ? 0.5 : 0.25;
    const Vec2 center = c.domain == DomainKind::kDisk ? Vec2(0.0, 0.0) : Vec2(0.5, 0.5);
    c.region = RegionDescriptor::disk(center, r);
  }

  if (auto it = kv.find("runge"); it != kv.end()) {
    reject_unknown("runge", it->second, {"r", "m", "delta", "tolerance"});
    for (const auto& [key, value] : it->second) {
      if (key == "r") {
        c.runge.r = to_double(key, value);
        c.runge_r_set = true;
      } else if (key == "m") {
        c.runge.m = static_cast<int>(to_int(key, value));
      } else if (key == "delta") {
        c.runge.delta_rel = to_double(key, value);
      } else if (key == "tolerance") {
        c.runge.tolerance = to_double(key, value);
      }
    }
  }
  if (!c.runge_r_set) {
    const double domain_radius = c.domain == DomainKind::kDisk ? 1.0 : 0.5;
    c.runge.r = std::min(15.0 * c.h, 0.15 * domain_radius);
  }

  if (auto it = kv.find("reduction"); it != kv.end()) {
    reject_unknown("reduction", it->second, {"theta", "max_tries", "scale0"});
    for (const auto& [key, value] : it->second) {
      if (key == "theta")
        c.reduction.theta = to_double(key, value);
      else if (key == "max_tries")
        c.reduction.max_tries = static_cast<int>(to_int(key, value));
      else if (key == "scale0")
        c.reduction.scale0_factor = to_double(key, value);
    }
  }

  validate(c);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

CoefficientField make_coefficients(const ScenarioConfig& config) {
  if (!config.preset.empty()) {
    CoefficientField f = make_preset(config.preset);
    if (config.lambda_set) f.lambda_ell = config.lambda;
    f.regularity = config.regularity;
    return f;
  }
  return make_from_expressions(config.a11, config.a12, config.a22, config.b1, config.b2,
                               config.c1, config.c2, config.q, config.lambda, config.regularity);
}

bool regularity_incompatible(const ScenarioConfig& config) {
  return ConstraintMap::make(config.constraint).ell_required > config.regularity.ell;
}

bool ScenarioConfig::operator==(const ScenarioConfig& other) const {
  return to_json() == other.to_json();
}

nlohmann::json ScenarioConfig::to_json() const {
  nlohmann::json j;
  j["domain"] = to_string(domain);
  j["h"] = h;
  j["constraint"] = to_string(constraint);
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  nlohmann::json jc;
  if (!preset.empty()) {
    jc["preset"] = preset;
  } else {
    jc["a11"] = a11;
    jc["a12"] = a12;
    jc["a22"] = a22;
    jc["b1"] = b1;
    jc["b2"] = b2;
    jc["c1"] = c1;
    jc["c2"] = c2;
    jc["q"] = q;
  }
  jc["lambda"] = lambda;
  j["coefficients"] = jc;
  j["regularity"] = {{"ell", regularity.ell}, {"alpha", regularity.alpha}};
  nlohmann::json jr;
  if (region.kind == RegionDescriptor::Kind::kDisk) {
    jr["kind"] = "disk";
    jr["cx"] = region.center.x();
    jr["cy"] = region.center.y();
    jr["radius"] = region.radius;
  } else {
    jr["kind"] = "polygon";
    jr["points"] = nlohmann::json::array();
    for (const Vec2& p : region.polygon) jr["points"].push_back({p.x(), p.y()});
  }
  j["region"] = jr;
  j["runge"] = {{"r", runge.r},
                {"m", runge.m},
                {"delta", runge.delta_rel},
                {"tolerance", runge.tolerance}};
  j["reduction"] = {{"theta", reduction.theta},
                    {"max_tries", reduction.max_tries},
                    {"scale0", reduction.scale0_factor}};
  return j;
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  const std::string dom = j.at("domain").get<std::string>();
  c.domain = dom == "disk" ? DomainKind::kDisk : DomainKind::kSquare;
  c.h = j.at("h").get<double>();
  c.constraint = constraint_from_string(j.at("constraint").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.output_dir = j.at("output_dir").get<std::string>();
  const auto& jc = j.at("coefficients");
  if (jc.contains("preset")) {
    c.preset = jc.at("preset").get<std::string>();
  } else {
    c.a11 = jc.value("a11", "");
    c.a12 = jc.value("a12", "");
    c.a22 = jc.value("a22", "");
    c.b1 = jc.value("b1", "");
    c.b2 = jc.value("b2", "");
    c.c1 = jc.value("c1", "");
    c.c2 = jc.value("c2", "");
    c.q = jc.value("q", "");
  }
  c.lambda = jc.at("lambda").get<double>();
  c.lambda_set = true;
  c.regularity.ell = j.at("regularity").at("ell").get<int>();
  c.regularity.alpha = j.at("regularity").at("alpha").get<double>();
  c.ell_set = c.alpha_set = true;
  const auto& jr = j.at("region");
  if (jr.at("kind").get<std::string>() == "disk") {
    c.region = RegionDescriptor::disk(
        Vec2(jr.at("cx").get<double>(), jr.at("cy").get<double>()), jr.at("radius").get<double>());
  } else {
    std::vector<Vec2> pts;
    for (const auto& p : jr.at("points")) pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    c.region = RegionDescriptor::make_polygon(std::move(pts));
  }
  c.region_set = true;
  c.runge.r = j.at("runge").at("r").get<double>();
  c.runge.m = j.at("runge").at("m").get<int>();
  c.runge.delta_rel = j.at("runge").at("delta").get<double>();
  c.runge.tolerance = j.at("runge").at("tolerance").get<double>();
  c.runge_r_set = true;
  c.reduction.theta = j.at("reduction").at("theta").get<double>();
  c.reduction.max_tries = j.at("reduction").at("max_tries").get<int>();
  c.reduction.scale0_factor = j.at("reduction").at("scale0").get<double>();
  validate(c);
  return c;
}

}  // namespace nonvanish
