#pragma once

// Stamped report files. Every artifact starts with
//   # config_hash=<hex> seed=<n>
// and readers refuse files produced under a different configuration.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace tagrisk::artifact {

struct Stamp {
  std::string config_hash;
  std::uint64_t seed = 0;

  std::string header() const;
};

/// Fixed-precision text for a double ("%.12g"); NaN prints as "nan".
std::string fmt(double v);
/// Round-trip exact text ("%.17g") for values read back by later stages.
std::string fmt_exact(double v);

/// Quotes a field when it holds a comma, quote or line break.
std::string csv_field(std::string_view s);

class CsvWriter {
 public:
  /// Creates parent directories and writes the stamp and the header row.
  CsvWriter(const std::filesystem::path& path, const Stamp& stamp,
            const std::vector<std::string>& columns);

  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t width_;
};

/// Writes text after the stamp line.
void write_text(const std::filesystem::path& path, const Stamp& stamp, std::string_view body);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
};

/// Throws ConfigError when the file is missing and DataError when the stamp
/// is absent or does not match.
CsvTable read_csv(const std::filesystem::path& path, const Stamp& expected);
std::string read_text(const std::filesystem::path& path, const Stamp& expected);

/// Splits one CSV record, honouring quotes.
std::vector<std::string> split_csv(std::string_view line);

double parse_double(std::string_view text);

}  // namespace tagrisk::artifact
