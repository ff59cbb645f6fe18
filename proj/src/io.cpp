#include "garnetspin/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "garnetspin/errors.hpp"

namespace garnetspin {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& t, double& v) {
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  return !t.empty() && ec == std::errc() && ptr == t.data() + t.size() && std::isfinite(v);
}

const std::vector<std::string> kColumns{"angle_deg", "frequency_MHz", "kind", "site", "weight", "field_T"};

}  // namespace

ResonanceFile read_resonances(std::istream& in, const std::string& source) {
  ResonanceFile file;
  std::map<std::string, std::size_t> column;
  std::string raw;
  int line = 0;
  int row = 0;
  bool have_kind = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw);
    if (text.empty()) continue;
    if (text.front() == '#') {
      const auto eq = text.find('=');
      if (eq != std::string::npos) {
        const std::string key = trim(text.substr(1, eq - 1));
        if (key.rfind("scan.", 0) == 0 || key == "convention") {
          file.metadata.emplace_back(key, trim(text.substr(eq + 1)));
        }
      }
      continue;
    }
    const auto fields = split(text);
    if (column.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (std::find(kColumns.begin(), kColumns.end(), fields[i]) == kColumns.end()) {
          throw InputError(source, line, "unknown column '" + fields[i] + "' in header");
        }
        if (column.count(fields[i])) throw InputError(source, line, "duplicate column '" + fields[i] + "'");
        column[fields[i]] = i;
      }
      for (const char* required : {"angle_deg", "frequency_MHz", "kind"}) {
        if (!column.count(required)) {
          throw InputError(source, line, std::string("header must name column '") + required + "'");
        }
      }
      continue;
    }

    ++row;
    const std::string where = "row " + std::to_string(row) + ": ";
    if (fields.size() != column.size()) {
      throw InputError(source, line,
                       where + "expected " + std::to_string(column.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    Resonance r;
    if (!parse_double(fields[column["angle_deg"]], r.scan_angle)) throw InputError(source, line, where + "bad angle_deg");
    if (!parse_double(fields[column["frequency_MHz"]], r.frequency)) {
      throw InputError(source, line, where + "bad frequency_MHz");
    }
    try {
      r.kind = parse_resonance_kind(fields[column["kind"]]);
    } catch (const DomainError& e) {
      throw InputError(source, line, where + e.what());
    }
    if (column.count("site") && !fields[column["site"]].empty()) {
      double s = 0.0;
      if (!parse_double(fields[column["site"]], s) || s != std::floor(s) || s < 0 || s > kSiteCount) {
        throw InputError(source, line, where + "site must be an integer 0..6");
      }
      if (s > 0) r.site = static_cast<int>(s);
    }
    if (column.count("weight") && !fields[column["weight"]].empty()) {
      if (!parse_double(fields[column["weight"]], r.weight) || !(r.weight > 0.0)) {
        throw InputError(source, line, where + "weight must be a positive number");
      }
    }
    if (column.count("field_T") && !fields[column["field_T"]].empty()) {
      double b = 0.0;
      if (!parse_double(fields[column["field_T"]], b) || b < 0.0) {
        throw InputError(source, line, where + "field_T must be a non-negative number");
      }
      r.field_tesla = b;
    }
    if (!have_kind) {
      file.kind = r.kind;
      have_kind = true;
    } else if (r.kind != file.kind) {
      throw InputError(source, line,
                       where + "kind '" + std::string(to_string(r.kind)) + "' differs from earlier rows ('" +
                           std::string(to_string(file.kind)) + "'); one kind per file");
    }
    file.resonances.push_back(r);
  }
  if (column.empty()) throw InputError(source, 0, "missing header row");
  return file;
}

ResonanceFile load_resonances(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string(), 0, "cannot open data file");
  return read_resonances(in, path.string());
}

RunConfig with_metadata(RunConfig cfg, const ResonanceFile& file, const std::string& source) {
  for (const auto& [key, value] : file.metadata) apply_config_entry(cfg, key, value, source, 0);
  try {
    cfg.scan.validate();
  } catch (const DomainError& e) {
    throw InputError(source, 0, e.what());
  }
  return cfg;
}

void write_resonances(std::ostream& out, std::span<const Resonance> resonances, const RotationScan& scan,
                      Convention convention, std::uint64_t seed) {
  const auto vec = [](const Vec3& v) {
    std::ostringstream s;
    s << std::setprecision(15) << v.x() << "," << v.y() << "," << v.z();
    return s.str();
  };
  out << "# seed = " << seed << "\n";
  out << "# convention = " << to_string(convention) << "\n";
  out << "# scan.optical_axis = " << vec(scan.optical_axis) << "\n";
  if (scan.reference_axis) out << "# scan.reference_axis = " << vec(*scan.reference_axis) << "\n";
  out << std::setprecision(15);
  out << "# scan.field_T = " << scan.field_magnitude << "\n";
  out << "# scan.offset_deg = " << scan.angular_offset << "\n";
  const bool any_field = std::any_of(resonances.begin(), resonances.end(), [](const Resonance& r) {
    return r.field_tesla.has_value();
  });
  out << "angle_deg,frequency_MHz,kind,site,weight" << (any_field ? ",field_T" : "") << "\n";
  out << std::setprecision(12);
  for (const auto& r : resonances) {
    out << r.scan_angle << "," << r.frequency << "," << to_string(r.kind) << "," << r.site.value_or(0) << ","
        << r.weight;
    if (any_field) out << "," << r.field_tesla.value_or(scan.field_magnitude);
    out << "\n";
  }
}

SpectrumTrace read_trace(std::istream& in, const std::string& source) {
  SpectrumTrace trace;
  std::string raw;
  int line = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw);
    if (text.empty()) continue;
    if (text.front() == '#') {
      if (text.find("kind=odnmr") != std::string::npos) trace.kind = TraceKind::odnmr;
      const auto s = text.find("seed=");
      if (s != std::string::npos) trace.seed = std::strtoull(text.c_str() + s + 5, nullptr, 10);
      continue;
    }
    const auto fields = split(text);
    if (!header) {
      if (fields.size() != 2 || fields[0] != "offset_MHz" || fields[1] != "amplitude") {
        throw InputError(source, line, "expected header 'offset_MHz,amplitude'");
      }
      header = true;
      continue;
    }
    double x = 0.0, y = 0.0;
    if (fields.size() != 2 || !parse_double(fields[0], x) || !parse_double(fields[1], y)) {
      throw InputError(source, line, "row " + std::to_string(trace.offsets.size() + 1) + ": expected two numbers");
    }
    if (!trace.offsets.empty() && x <= trace.offsets.back()) {
      throw InputError(source, line, "offsets must be strictly increasing");
    }
    trace.offsets.push_back(x);
    trace.amplitude.push_back(y);
  }
  if (!header) throw InputError(source, 0, "missing header row");
  if (trace.offsets.size() < 3) throw InputError(source, 0, "trace needs at least three samples");
  const double step = (trace.offsets.back() - trace.offsets.front()) / static_cast<double>(trace.offsets.size() - 1);
  for (std::size_t i = 1; i < trace.offsets.size(); ++i) {
    if (std::abs(trace.offsets[i] - trace.offsets[i - 1] - step) > 1e-6 * std::abs(step) + 1e-9) {
      throw InputError(source, 0, "offset grid is not uniform");
    }
  }
  return trace;
}

SpectrumTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string(), 0, "cannot open trace file");
  return read_trace(in, path.string());
}

}  // namespace garnetspin
