#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace ruinlab {

/// Header plus string cells. Blank lines are skipped; no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index or -1.
  int column(const std::string& name) const;
  /// Column index; throws ConfigError(ParseError) when absent.
  int require(const std::string& name) const;
  double number(std::size_t row, int col) const;
  long integer(std::size_t row, int col) const;
};

CsvTable parse_csv(const std::string& text, const std::string& origin = "<string>");
CsvTable read_csv(const std::filesystem::path& path);

/// 17 significant digits, the round-trip precision of a double.
std::string format_number(double x);

/// Builds CSV text row by row.
class CsvBuilder {
 public:
  explicit CsvBuilder(const std::vector<std::string>& header);
  CsvBuilder& cell(double x);
  CsvBuilder& cell(long long x);
  CsvBuilder& cell(int x) { return cell(static_cast<long long>(x)); }
  CsvBuilder& cell(long x) { return cell(static_cast<long long>(x)); }
  CsvBuilder& cell(const std::string& s);
  void end_row();
  const std::string& text() const { return text_; }

 private:
  std::string text_;
  bool row_open_ = false;
};

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::uint64_t fnv1a64(const std::string& bytes);

struct RunManifest {
  std::string config_hash;  ///< FNV-1a of the canonical config serialization, hex
  std::uint64_t seed = 0;
  std::string command;
  nlohmann::json parameters = nlohmann::json::object();
  std::string version;
  std::string started_at;  ///< UTC, ISO 8601
  double wall_clock_seconds = 0.0;
};

nlohmann::json to_json(const RunManifest& m);

/// Path of the manifest that accompanies `output`.
std::filesystem::path manifest_path(const std::filesystem::path& output);

void write_manifest(const std::filesystem::path& output, const RunManifest& m);

/// Library version string.
std::string version();

}  // namespace ruinlab
