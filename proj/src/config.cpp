#include "garnetspin/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "garnetspin/errors.hpp"

namespace garnetspin {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Context {
  const std::string& source;
  int line;

  [[noreturn]] void fail(const std::string& msg) const { throw InputError(source, line, msg); }
};

double to_number(const std::string& text, const Context& ctx) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    ctx.fail("expected a number, got '" + t + "'");
  }
  return v;
}

std::vector<double> to_numbers(const std::string& text, const Context& ctx) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_number(item, ctx));
  return out;
}

std::array<double, 3> to_triple(const std::string& text, const Context& ctx) {
  const auto v = to_numbers(text, ctx);
  if (v.size() != 3) ctx.fail("expected three comma-separated numbers, got " + std::to_string(v.size()));
  return {v[0], v[1], v[2]};
}

Vec3 to_vec(const std::string& text, const Context& ctx) {
  const auto t = to_triple(text, ctx);
  return {t[0], t[1], t[2]};
}

bool apply_level(LevelConfig& level, const std::string& field, const std::string& value, const Context& ctx) {
  if (field == "g_J") {
    level.constants.g_J = to_number(value, ctx);
  } else if (field == "A_J") {
    level.constants.A_J = to_number(value, ctx);
    if (level.constants.A_J == 0.0) ctx.fail("A_J must be nonzero");
  } else if (field == "gn_beta_n") {
    level.constants.g_n_beta_n = to_number(value, ctx);
  } else if (field == "g") {
    level.g_values = to_triple(value, ctx);
    level.products.reset();
  } else if (field == "AJ_lambda") {
    level.products = to_triple(value, ctx);
    level.g_values.reset();
  } else {
    return false;
  }
  return true;
}

}  // namespace

LevelParameters LevelConfig::parameters() const {
  if (products) return LevelParameters::from_products(constants, *products);
  if (g_values) return LevelParameters::from_g_values(constants, {*g_values});
  throw DomainError(std::string(to_string(constants.label)) + " level has no tensor parameters");
}

SearchContext RunConfig::search_context() const {
  return {ground.parameters(), excited.parameters(), convention, search_model};
}

RunConfig default_config() {
  RunConfig c;
  c.ground.constants = {Level::ground, 1.16, -470.3, -3.53};
  c.ground.g_values = std::array<double, 3>{27.0, 146.0, 36.0};
  c.excited.constants = {Level::excited, 0.8, -678.3, -3.53};
  c.excited.g_values = std::array<double, 3>{7.0, 92.0, 16.0};
  return c;
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value, const std::string& source,
                        int line) {
  const Context ctx{source, line};
  try {
    if (key.rfind("ground.", 0) == 0) {
      if (apply_level(cfg.ground, key.substr(7), value, ctx)) return;
    } else if (key.rfind("excited.", 0) == 0) {
      if (apply_level(cfg.excited, key.substr(8), value, ctx)) return;
    } else if (key == "convention") {
      cfg.convention = parse_convention(trim(value));
      return;
    } else if (key == "search.model") {
      cfg.search_model = parse_splitting_model(trim(value));
      return;
    } else if (key == "seed") {
      const double s = to_number(value, ctx);
      if (s < 0 || s != std::floor(s)) ctx.fail("seed must be a non-negative integer");
      cfg.seed = static_cast<std::uint64_t>(s);
      return;
    } else if (key == "grid.b_max") {
      cfg.grid.b_max = to_number(value, ctx);
      return;
    } else if (key == "grid.b_step") {
      cfg.grid.b_step = to_number(value, ctx);
      return;
    } else if (key == "grid.theta_step") {
      cfg.grid.theta_step = to_number(value, ctx);
      return;
    } else if (key == "grid.phi_step") {
      cfg.grid.phi_step = to_number(value, ctx);
      return;
    } else if (key == "scan.optical_axis") {
      cfg.scan.optical_axis = to_vec(value, ctx);
      return;
    } else if (key == "scan.reference_axis") {
      cfg.scan.reference_axis = to_vec(value, ctx);
      return;
    } else if (key == "scan.field_T") {
      cfg.scan.field_magnitude = to_number(value, ctx);
      return;
    } else if (key == "scan.start_deg") {
      cfg.scan.angle_start = to_number(value, ctx);
      return;
    } else if (key == "scan.stop_deg") {
      cfg.scan.angle_stop = to_number(value, ctx);
      return;
    } else if (key == "scan.step_deg") {
      cfg.scan.angle_step = to_number(value, ctx);
      return;
    } else if (key == "scan.offset_deg") {
      cfg.scan.angular_offset = to_number(value, ctx);
      return;
    } else if (key == "shb.linewidth_MHz") {
      cfg.spectra.shb_linewidth = to_number(value, ctx);
      return;
    } else if (key == "shb.noise") {
      cfg.spectra.shb_noise = to_number(value, ctx);
      return;
    } else if (key == "odnmr.linewidth_MHz") {
      cfg.spectra.odnmr_linewidth = to_number(value, ctx);
      return;
    } else if (key == "odnmr.start_MHz") {
      cfg.spectra.odnmr_start = to_number(value, ctx);
      return;
    } else if (key == "odnmr.stop_MHz") {
      cfg.spectra.odnmr_stop = to_number(value, ctx);
      return;
    } else if (key == "odnmr.step_MHz") {
      cfg.spectra.odnmr_step = to_number(value, ctx);
      return;
    } else if (key == "odnmr.noise") {
      cfg.spectra.odnmr_noise = to_number(value, ctx);
      return;
    } else if (key == "resonances.noise_fraction") {
      cfg.spectra.resonance_noise = to_number(value, ctx);
      return;
    } else if (key.rfind("paths.", 0) == 0 && key.size() > 6) {
      cfg.paths[key.substr(6)] = trim(value);
      return;
    }
  } catch (const DomainError& e) {
    ctx.fail(e.what());
  }
  ctx.fail("unknown key '" + key + "'");
}

RunConfig parse_config(std::istream& in, const std::string& source, RunConfig base) {
  std::string raw;
  int line = 0;
  std::map<std::string, int> seen_tensor;  // "ground"/"excited" -> line
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw InputError(source, line, "expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw InputError(source, line, "missing key before '='");
    if (value.empty()) throw InputError(source, line, "missing value for '" + key + "'");

    for (const std::string level : {"ground", "excited"}) {
      if (key == level + ".g" || key == level + ".AJ_lambda") {
        if (seen_tensor.count(level)) {
          throw InputError(source, line,
                           level + " tensor already given on line " + std::to_string(seen_tensor[level]) +
                               "; use exactly one of g or AJ_lambda");
        }
        seen_tensor[level] = line;
      }
    }
    apply_config_entry(base, key, value, source, line);
    if (key.rfind("paths.", 0) == 0) {
      std::filesystem::path p = base.paths[key.substr(6)];
      if (p.is_relative() && source.find('/') != std::string::npos) {
        p = std::filesystem::path(source).parent_path() / p;
        base.paths[key.substr(6)] = p;
      }
      if (!std::filesystem::exists(p)) throw InputError(source, line, "path '" + p.string() + "' does not exist");
    }
  }
  try {
    base.grid.validate();
    base.scan.validate();
  } catch (const DomainError& e) {
    throw InputError(source, 0, e.what());
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string(), 0, "cannot open config file");
  return parse_config(in, path.string());
}

std::filesystem::path data_dir() {
#ifdef GARNETSPIN_DATA_DIR
  return GARNETSPIN_DATA_DIR;
#else
  return "data";
#endif
}

}  // namespace garnetspin
