#include "tag/experiments.hpp"

#include "tag/io.hpp"

#include <charconv>
#include <filesystem>
#include <map>
#include <sstream>
#include <system_error>

namespace tag {
namespace {

// Shortest round-trip representation; identical inputs give identical bytes.
std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto a = cell.find_first_not_of(" \t\r");
    const auto b = cell.find_last_not_of(" \t\r");
    cells.push_back(a == std::string::npos ? std::string() : cell.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

class CsvTable {
 public:
  explicit CsvTable(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto cells = split_line(line);
      if (header) {
        for (std::size_t i = 0; i < cells.size(); ++i) columns_[cells[i]] = i;
        header = false;
      } else {
        rows_.push_back(std::move(cells));
      }
    }
    if (header) throw IoError("csv: missing header line");
  }

  bool has(const std::string& name) const { return columns_.count(name) != 0; }

  std::size_t column(const std::string& name) const {
    const auto it = columns_.find(name);
    if (it == columns_.end()) throw IoError("csv: missing column '" + name + "'");
    return it->second;
  }

  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  static const std::string& cell(const std::vector<std::string>& row, std::size_t col) {
    static const std::string empty;
    return col < row.size() ? row[col] : empty;
  }

  static double number(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw IoError("csv: not a number: '" + s + "'");
    }
    return v;
  }

  static int integer(const std::string& s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw IoError("csv: not an integer: '" + s + "'");
    }
    return v;
  }

 private:
  std::map<std::string, std::size_t> columns_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace

std::string sweep_csv(std::span<const SweepRecord> records) {
  std::string out = "trial_id,stroke_mm,model_dtheta_deg,model_dtheta_noelong_deg,estimated_dtheta_deg\n";
  for (const auto& r : records) {
    out += std::to_string(r.trial_id) + ',' + num(r.stroke_mm) + ',' + opt_num(r.model_dtheta_deg) + ',' +
           opt_num(r.model_dtheta_noelong_deg) + ',' + opt_num(r.estimated_dtheta_deg) + '\n';
  }
  return out;
}

std::string steering_csv(std::span<const SteeringRecord> records) {
  std::string out = "phi_deg,trial_id,theoretical_dx_mm,measured_dx_mm\n";
  for (const auto& r : records) {
    for (std::size_t t = 0; t < r.measured_dx_mm.size(); ++t) {
      out += num(r.phi_deg) + ',' + std::to_string(t) + ',' + num(r.theoretical_dx_mm) + ',' +
             num(r.measured_dx_mm[t]) + '\n';
    }
  }
  return out;
}

std::string steering_summary_csv(std::span<const SteeringRecord> records) {
  std::string out = "phi_deg,theoretical_dx_mm,mean_dx_mm,std_dx_mm,percent_error\n";
  for (const auto& r : records) {
    out += num(r.phi_deg) + ',' + num(r.theoretical_dx_mm) + ',' + num(r.mean_dx_mm) + ',' +
           num(r.std_dx_mm) + ',' + num(r.percent_error) + '\n';
  }
  return out;
}

std::string calibration_csv(const CalibrationResult& result) {
  std::string out = "iteration,l_mm,c,residual_rmse_deg\n";
  for (const auto& it : result.history) {
    out += std::to_string(it.iteration) + ',' + num(it.l_mm) + ',' + num(it.c) + ',' +
           num(it.residual_rmse_deg) + '\n';
  }
  return out;
}

void export_report(const std::string& dir, const std::string& name, const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory: " + dir);
  write_file_atomic((std::filesystem::path(dir) / name).string(), content);
}

std::vector<SweepMeasurement> parse_sweep_measurements(const std::string& csv) {
  const CsvTable table(csv);
  const auto trial = table.column("trial_id");
  const auto stroke = table.column("stroke_mm");
  const auto est = table.column("estimated_dtheta_deg");
  std::vector<SweepMeasurement> out;
  for (const auto& row : table.rows()) {
    const auto& e = CsvTable::cell(row, est);
    if (e.empty()) continue;
    out.push_back({CsvTable::integer(CsvTable::cell(row, trial)), CsvTable::number(CsvTable::cell(row, stroke)),
                   CsvTable::number(e)});
  }
  return out;
}

std::vector<SteeringMeasurement> parse_steering_measurements(const std::string& csv) {
  const CsvTable table(csv);
  const auto phi = table.column("phi_deg");
  const auto trial = table.column("trial_id");
  const auto measured = table.column("measured_dx_mm");
  std::vector<SteeringMeasurement> out;
  for (const auto& row : table.rows()) {
    out.push_back({CsvTable::number(CsvTable::cell(row, phi)), CsvTable::integer(CsvTable::cell(row, trial)),
                   CsvTable::number(CsvTable::cell(row, measured))});
  }
  return out;
}

std::vector<CalibrationSample> parse_calibration_samples(const std::string& csv) {
  const CsvTable table(csv);
  const auto stroke = table.column("stroke_mm");
  std::size_t angle = 0;
  bool found = false;
  for (const char* name : {"angle_deg", "estimated_dtheta_deg", "model_dtheta_deg"}) {
    if (table.has(name)) {
      angle = table.column(name);
      found = true;
      break;
    }
  }
  if (!found) throw IoError("csv: need an angle_deg, estimated_dtheta_deg or model_dtheta_deg column");
  std::vector<CalibrationSample> out;
  for (const auto& row : table.rows()) {
    const auto& a = CsvTable::cell(row, angle);
    const auto& s = CsvTable::cell(row, stroke);
    if (a.empty() || s.empty()) continue;
    out.push_back({CsvTable::number(s), deg_to_rad(CsvTable::number(a))});
  }
  return out;
}

}  // namespace tag
