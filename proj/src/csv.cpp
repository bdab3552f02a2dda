#include "ruinlab/csv.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "ruinlab/errors.hpp"

#ifndef RUINLAB_VERSION
#define RUINLAB_VERSION "unknown"
#endif

namespace ruinlab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return static_cast<int>(k);
  return -1;
}

int CsvTable::require(const std::string& name) const {
  const int k = column(name);
  if (k < 0) throw ConfigError(ConfigErrorKind::ParseError, "CSV lacks column '" + name + "'");
  return k;
}

double CsvTable::number(std::size_t row, int col) const {
  const std::string& s = rows.at(row).at(static_cast<std::size_t>(col));
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used == s.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(ConfigErrorKind::ParseError, "CSV cell '" + s + "' is not a number");
}

long CsvTable::integer(std::size_t row, int col) const {
  const double x = number(row, col);
  const long k = static_cast<long>(x);
  if (static_cast<double>(k) != x) throw ConfigError(ConfigErrorKind::ParseError, "CSV cell is not an integer");
  return k;
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ConfigError(ConfigErrorKind::ParseError,
                        origin + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                            " cells, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ConfigError(ConfigErrorKind::ParseError, origin + ": empty CSV");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(ConfigErrorKind::ParseError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvBuilder::CsvBuilder(const std::vector<std::string>& header) {
  for (const auto& h : header) cell(h);
  end_row();
}

CsvBuilder& CsvBuilder::cell(double x) { return cell(format_number(x)); }

CsvBuilder& CsvBuilder::cell(long long x) { return cell(std::to_string(x)); }

CsvBuilder& CsvBuilder::cell(const std::string& s) {
  if (row_open_) text_ += ',';
  text_ += s;
  row_open_ = true;
  return *this;
}

void CsvBuilder::end_row() {
  text_ += '\n';
  row_open_ = false;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

nlohmann::json to_json(const RunManifest& m) {
  return {{"config_hash", m.config_hash}, {"seed", m.seed},
          {"command", m.command},         {"parameters", m.parameters},
          {"version", m.version},         {"started_at", m.started_at},
          {"wall_clock_seconds", m.wall_clock_seconds}};
}

std::filesystem::path manifest_path(const std::filesystem::path& output) {
  std::filesystem::path p = output;
  p += ".manifest.json";
  return p;
}

void write_manifest(const std::filesystem::path& output, const RunManifest& m) {
  write_file_atomic(manifest_path(output), to_json(m).dump(2) + "\n");
}

std::string version() { return RUINLAB_VERSION; }

}  // namespace ruinlab
