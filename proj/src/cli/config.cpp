#include <array>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hheat/cli.hpp"
#include "hheat/errors.hpp"

namespace hheat::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_real(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

void only_keys(const std::map<std::string, std::string>& spec, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : spec) {
    if (!allowed.count(k)) throw ConfigError("domain '" + spec.at("name") + "': unknown key '" + k + "'");
  }
}

double get_or(const std::map<std::string, std::string>& spec, const std::string& key, double fallback) {
  const auto it = spec.find(key);
  return it == spec.end() ? fallback : parse_real("domain." + key, it->second);
}

const std::string& require(const std::map<std::string, std::string>& spec, const std::string& key) {
  const auto it = spec.find(key);
  if (it == spec.end()) throw ConfigError("domain '" + spec.at("name") + "': missing key '" + key + "'");
  return it->second;
}

}  // namespace

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_real("list", item));
  return out;
}

RunConfig load_config(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (section == "domain") {
      for (const auto& [k, v] : body) cfg.domain[k] = trim(v.data());
    } else if (section == "run") {
      for (const auto& [k, node] : body) {
        const std::string v = trim(node.data());
        const std::string key = "run." + k;
        if (k == "t_grid") {
          cfg.t_grid = parse_list(v);
        } else if (k == "n_paths") {
          cfg.n_paths = parse_int<int>(key, v);
        } else if (k == "n_steps") {
          cfg.n_steps = parse_int<int>(key, v);
        } else if (k == "n_substeps") {
          cfg.n_substeps = parse_int<int>(key, v);
        } else if (k == "shell_eps") {
          if (v == "auto") {
            cfg.shell_eps.reset();
          } else {
            cfg.shell_eps = parse_real(key, v);
          }
        } else if (k == "seed") {
          cfg.seed = parse_int<std::uint64_t>(key, v);
        } else if (k == "output_dir") {
          cfg.output_dir = v;
        } else if (k == "quadrature_level") {
          cfg.quadrature_level = parse_int<int>(key, v);
        } else if (k == "surface_nodes") {
          cfg.surface_nodes = parse_int<int>(key, v);
        } else if (k == "delta") {
          cfg.delta = parse_real(key, v);
        } else if (k == "heat_csv") {
          cfg.heat_csv = v;
        } else {
          throw ConfigError("unknown key '" + key + "'");
        }
      }
    } else {
      throw ConfigError("unknown section '" + section + "'");
    }
  }
  if (!cfg.domain.count("name")) throw ConfigError("missing domain.name");
  return cfg;
}

void check_config(const RunConfig& cfg, const std::string& command) {
  if (cfg.t_grid.empty()) throw ConfigError("t_grid is empty");
  for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
    if (!(cfg.t_grid[i] > 0.0)) throw ConfigError("t_grid must be strictly positive");
    if (i > 0 && !(cfg.t_grid[i] > cfg.t_grid[i - 1])) throw ConfigError("t_grid must be strictly ascending");
  }
  if (cfg.n_paths < 1 || cfg.n_steps < 1 || cfg.n_substeps < 1) {
    throw ConfigError("n_paths, n_steps and n_substeps must be positive");
  }
  if (command == "heat" && cfg.n_paths < 1000) throw ConfigError("heat runs need n_paths >= 1000");
  if (cfg.quadrature_level < 0 || cfg.quadrature_level > 6) throw ConfigError("quadrature_level must be in [0, 6]");
  if (cfg.surface_nodes < 1) throw ConfigError("surface_nodes must be positive");
  if (cfg.shell_eps && !(*cfg.shell_eps > 0.0)) throw ConfigError("shell_eps must be positive or auto");
}

DomainPtr make_domain(const std::map<std::string, std::string>& spec) {
  const auto it = spec.find("name");
  if (it == spec.end()) throw ConfigError("missing domain.name");
  const std::string& name = it->second;
  if (name == "cylinder") {
    only_keys(spec, {"name", "R", "z_period"});
    const double r = get_or(spec, "R", 1.0), period = get_or(spec, "z_period", 1.0);
    if (!(r > 0.0) || !(period > 0.0)) throw ConfigError("cylinder: R and z_period must be positive");
    return std::make_shared<CylinderDomain>(r, period);
  }
  if (name == "vertical_slab") {
    only_keys(spec, {"name", "c"});
    const double c = get_or(spec, "c", 0.5);
    if (!(c > 0.0)) throw ConfigError("vertical_slab: c must be positive");
    return std::make_shared<SlabDomain>(c);
  }
  if (name == "koranyi_ball") {
    only_keys(spec, {"name", "r"});
    const double r = get_or(spec, "r", 1.0);
    if (!(r > 0.0)) throw ConfigError("koranyi_ball: r must be positive");
    return std::make_shared<KoranyiBallDomain>(r);
  }
  if (name == "custom") {
    only_keys(spec, {"name", "F", "grad", "hess", "bbox", "period"});
    const std::vector<double> b = parse_list(require(spec, "bbox"));
    if (b.size() != 6) throw ConfigError("custom: bbox needs 6 numbers lo1,lo2,lo3,hi1,hi2,hi3");
    Box box;
    box.lo = {b[0], b[1], b[2]};
    box.hi = {b[3], b[4], b[5]};
    Vec3 periods = Vec3::Zero();
    if (spec.count("period")) {
      const std::vector<double> p = parse_list(spec.at("period"));
      if (p.size() != 3) throw ConfigError("custom: period needs 3 numbers");
      periods = {p[0], p[1], p[2]};
    }
    auto dom = std::make_shared<ExpressionDomain>(require(spec, "F"), split(require(spec, "grad"), ';'),
                                                  split(require(spec, "hess"), ';'), box, periods);
    validate_derivatives(*dom);
    return dom;
  }
  throw ConfigError("unknown domain '" + name + "'");
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

std::vector<HeatRow> read_heat_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty file");
  const std::vector<std::string> header = split(line, ',');
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw SchemaError(path.string() + ": missing column '" + name + "'");
  };
  const std::size_t ct = column("t"), cq = column("q_hat"), cs = column("std_err");
  std::vector<HeatRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != header.size()) throw SchemaError(path.string() + ": line " + std::to_string(lineno) + " has the wrong field count");
    const std::string where = path.string() + ":" + std::to_string(lineno);
    try {
      rows.push_back({parse_real(where, f[ct]), parse_real(where, f[cq]), parse_real(where, f[cs])});
    } catch (const ConfigError& e) {
      throw SchemaError(e.what());
    }
  }
  return rows;
}

}  // namespace hheat::cli
