#include "tagrisk/artifact.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tagrisk/error.hpp"

namespace tagrisk::artifact {

std::string Stamp::header() const {
  return "# config_hash=" + config_hash + " seed=" + std::to_string(seed);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
  return buf;
}

std::string fmt_exact(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const Stamp& stamp,
                     const std::vector<std::string>& columns)
    : path_(path), width_(columns.size()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw DataError("cannot write " + path.string());
  out_ << stamp.header() << '\n';
  row(columns);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) {
    throw ValidationError("row width " + std::to_string(fields.size()) + " does not match " +
                          std::to_string(width_) + " columns in " + path_.string());
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_field(fields[i]);
  }
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw DataError("failed writing " + path_.string());
}

void write_text(const std::filesystem::path& path, const Stamp& stamp, std::string_view body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << stamp.header() << '\n' << body;
  if (!out) throw DataError("failed writing " + path.string());
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw DataError("missing column '" + std::string(name) + "'");
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

namespace {

std::ifstream open_checked(const std::filesystem::path& path, const Stamp& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("missing artifact " + path.string() + "; run the earlier stage first");
  std::string first;
  std::getline(in, first);
  if (first != expected.header()) {
    throw DataError(path.string() + " was produced under a different configuration (" +
                    (first.rfind("# config_hash=", 0) == 0 ? first.substr(2) : "no stamp") +
                    ", expected " + expected.header().substr(2) + ")");
  }
  return in;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path, const Stamp& expected) {
  auto in = open_checked(path, expected);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + " has no header row");
  t.columns = split_csv(line);
  long n = 2;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != t.columns.size()) {
      throw ParseError(path.string() + ": expected " + std::to_string(t.columns.size()) +
                           " fields",
                       n);
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

std::string read_text(const std::filesystem::path& path, const Stamp& expected) {
  auto in = open_checked(path, expected);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::nan("");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("bad number '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace tagrisk::artifact
