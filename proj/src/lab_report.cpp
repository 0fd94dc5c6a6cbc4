#include "membrane/lab.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace membrane::lab {

double report_number(double v) { return std::isfinite(v) ? std::stod(format_number(v)) : v; }

void write_table_csv(std::ostream& os, const Table& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) os << (i ? "," : "") << table.header[i];
  os << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw std::logic_error("table '" + table.name + "' has a ragged row");
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

std::vector<std::filesystem::path> write_report(const ReportBundle& bundle, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path root = dir / bundle.experiment;
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw std::runtime_error("cannot create '" + root.string() + "': " + ec.message());
  std::vector<fs::path> paths;
  auto open = [&](const fs::path& p) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    return os;
  };
  for (const auto& t : bundle.tables) {
    const fs::path p = root / (t.name + ".csv");
    std::ofstream os = open(p);
    write_table_csv(os, t);
    if (!os) throw std::runtime_error("write failed for '" + p.string() + "'");
    paths.push_back(p);
  }
  const fs::path s = root / "summary.json";
  std::ofstream os = open(s);
  os << bundle.summary.dump(2) << '\n';
  if (!os) throw std::runtime_error("write failed for '" + s.string() + "'");
  paths.push_back(s);
  return paths;
}

}  // namespace membrane::lab
