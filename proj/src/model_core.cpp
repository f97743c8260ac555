#include "tag/model_core.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace tag {

void validate_actuator(const ActuatorConfig& cfg) {
  if (!(cfg.lead_screw_pitch_mm_per_rev > 0.0)) {
    throw DomainError(ErrorKind::InvalidParameter, "lead_screw_pitch_mm_per_rev must be positive");
  }
  if (cfg.encoder_counts_per_rev <= 0) {
    throw DomainError(ErrorKind::InvalidParameter, "encoder_counts_per_rev must be positive");
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  double v = 0.0;
  in >> v;
  if (in.fail() || !in.eof()) {
    throw IoError("config: value for '" + key + "' is not a number: '" + text + "'");
  }
  return v;
}

using Setter = std::function<void(ModelConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"fulcrum_length_mm",
       [](ModelConfig& c, const auto& k, const auto& v) { c.params.fulcrum_length_mm = parse_double(v, k); }},
      {"spring_constant_n_per_mm",
       [](ModelConfig& c, const auto& k, const auto& v) { c.params.spring_constant_n_per_mm = parse_double(v, k); }},
      {"wire_length_mm",
       [](ModelConfig& c, const auto& k, const auto& v) { c.params.wire_length_mm = parse_double(v, k); }},
      {"wire_modulus_gpa",
       [](ModelConfig& c, const auto& k, const auto& v) { c.params.wire_modulus_gpa = parse_double(v, k); }},
      {"wire_radius_mm",
       [](ModelConfig& c, const auto& k, const auto& v) { c.params.wire_radius_mm = parse_double(v, k); }},
      {"max_stroke_mm",
       [](ModelConfig& c, const auto& k, const auto& v) { c.params.max_stroke_mm = parse_double(v, k); }},
      {"rest_incident_deg",
       [](ModelConfig& c, const auto& k, const auto& v) { c.params.rest_incident_deg = parse_double(v, k); }},
      {"v1_mm", [](ModelConfig& c, const auto& k, const auto& v) { c.geometry.v1_mm = parse_double(v, k); }},
      {"v2_mm", [](ModelConfig& c, const auto& k, const auto& v) { c.geometry.v2_mm = parse_double(v, k); }},
      {"lead_screw_pitch_mm_per_rev",
       [](ModelConfig& c, const auto& k, const auto& v) {
         c.actuator.lead_screw_pitch_mm_per_rev = parse_double(v, k);
       }},
      {"encoder_counts_per_rev",
       [](ModelConfig& c, const auto& k, const auto& v) {
         int n = 0;
         auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
         if (ec != std::errc() || ptr != v.data() + v.size()) {
           throw IoError("config: value for '" + k + "' is not an integer: '" + v + "'");
         }
         c.actuator.encoder_counts_per_rev = n;
       }},
  };
  return table;
}

}  // namespace

void apply_config_text(const std::string& text, ModelConfig& cfg) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw IoError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw IoError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    it->second(cfg, key, value);
  }
}

ModelConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  ModelConfig cfg;
  apply_config_text(buf.str(), cfg);
  return cfg;
}

std::string to_config_text(const ModelConfig& cfg) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::setprecision(17);
  out << "fulcrum_length_mm = " << cfg.params.fulcrum_length_mm << '\n'
      << "spring_constant_n_per_mm = " << cfg.params.spring_constant_n_per_mm << '\n'
      << "wire_length_mm = " << cfg.params.wire_length_mm << '\n'
      << "wire_modulus_gpa = " << cfg.params.wire_modulus_gpa << '\n'
      << "wire_radius_mm = " << cfg.params.wire_radius_mm << '\n'
      << "max_stroke_mm = " << cfg.params.max_stroke_mm << '\n'
      << "rest_incident_deg = " << cfg.params.rest_incident_deg << '\n'
      << "v1_mm = " << cfg.geometry.v1_mm << '\n'
      << "v2_mm = " << cfg.geometry.v2_mm << '\n'
      << "lead_screw_pitch_mm_per_rev = " << cfg.actuator.lead_screw_pitch_mm_per_rev << '\n'
      << "encoder_counts_per_rev = " << cfg.actuator.encoder_counts_per_rev << '\n';
  return out.str();
}

Transformd load_transform_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open transform file: " + path);
  in.imbue(std::locale::classic());
  Transformd::Matrix4 m;
  for (int i = 0; i < 16; ++i) {
    double v = 0.0;
    if (!(in >> v)) throw IoError("transform file needs 16 numbers: " + path);
    m(i / 4, i % 4) = v;
  }
  std::string extra;
  if (in >> extra) throw IoError("transform file has trailing data: " + path);
  return Transformd::from_matrix(m);
}

}  // namespace tag
