#include "hdrisk/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "hdrisk/errors.hpp"

namespace hdrisk {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    std::size_t start = field.find_first_not_of(' ');
    out.push_back(start == std::string::npos ? std::string() : field.substr(start));
  }
  return out;
}

bool parse_double(const std::string& token, double& value) {
  if (token.empty()) return false;
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

std::vector<std::vector<double>> read_numeric_rows(std::istream& in, bool allow_header) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first_data_line = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_line(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (!parse_double(fields[k], row[k])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (allow_header && first_data_line) {
        first_data_line = false;
        continue;
      }
      throw ValidationError("csv line " + std::to_string(line_no) + ": non-numeric field");
    }
    first_data_line = false;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ValidationError("csv line " + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in) {
  const auto rows = read_numeric_rows(in, true);
  if (rows.empty()) throw ValidationError("dataset csv has no observations");
  if (rows.front().size() < 2) throw ValidationError("dataset csv needs y and at least one column");
  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(rows.front().size()) - 1;
  Dataset data{Matrix(n, p), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    data.y[i] = row[0];
    for (Index j = 0; j < p; ++j) data.X(i, j) = row[static_cast<std::size_t>(j + 1)];
  }
  data.validate();
  return data;
}

Dataset read_dataset_csv(const std::string& path) {
  auto in = open_or_throw(path);
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << kDatasetHeaderComment << '\n' << "y";
  for (Index j = 0; j < data.p(); ++j) out << ",x" << (j + 1);
  out << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    out << format_double(data.y[i]);
    for (Index j = 0; j < data.p(); ++j) out << ',' << format_double(data.X(i, j));
    out << '\n';
  }
}

Matrix read_matrix_csv(const std::string& path) {
  auto in = open_or_throw(path);
  const auto rows = read_numeric_rows(in, false);
  if (rows.empty()) throw ValidationError("matrix csv '" + path + "' is empty");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace hdrisk
