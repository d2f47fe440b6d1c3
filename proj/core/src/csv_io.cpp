#include "utc/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "utc/error.hpp"

namespace utc {

namespace {

struct RawTable {
  std::vector<std::string> symbols;
  std::vector<std::string> timestamps;
  Eigen::MatrixXd values;  // symbols x timestamps
  bool flagged_returns = false;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, delim)) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == delim) cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no, std::size_t col,
                  const std::string& path) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != last) {
    std::ostringstream os;
    os << path << ":" << line_no << ": " << (cell.empty() ? "missing value" : "bad number '" + cell + "'")
       << " in column " << col;
    throw InputError(os.str());
  }
  return v;
}

RawTable read_table(const std::string& path, const CsvFormat& format) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);

  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (t == kReturnsMarker) table.flagged_returns = true;
      continue;
    }
    header = split(t, format.delimiter);
    break;
  }
  if (header.empty()) throw InputError(path + ": missing header row");
  if (header.front() != format.timestamp_column) {
    throw InputError(path + ": first header cell must be '" + format.timestamp_column + "', got '" +
                     header.front() + "'");
  }
  if (header.size() < 2) throw InputError(path + ": no symbol columns");
  table.symbols.assign(header.begin() + 1, header.end());
  for (std::size_t i = 0; i < table.symbols.size(); ++i) {
    if (table.symbols[i].empty()) {
      throw InputError(path + ": empty symbol name in header column " + std::to_string(i + 1));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (table.symbols[i] == table.symbols[j]) {
        throw InputError(path + ": duplicate symbol '" + table.symbols[i] + "'");
      }
    }
  }

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cells = split(t, format.delimiter);
    if (cells.size() != header.size()) {
      std::ostringstream os;
      os << path << ":" << line_no << ": expected " << header.size() << " cells, found "
         << cells.size();
      throw InputError(os.str());
    }
    if (cells.front().empty()) {
      throw InputError(path + ":" + std::to_string(line_no) + ": missing timestamp");
    }
    if (!table.timestamps.empty()) {
      const std::string& prev = table.timestamps.back();
      if (cells.front() == prev) {
        throw InputError(path + ":" + std::to_string(line_no) + ": duplicate timestamp '" +
                         cells.front() + "'");
      }
      if (cells.front() < prev) {
        throw InputError(path + ":" + std::to_string(line_no) + ": timestamp '" + cells.front() +
                         "' is earlier than the previous row '" + prev + "'");
      }
    }
    table.timestamps.push_back(cells.front());
    std::vector<double> values;
    values.reserve(cells.size() - 1);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      values.push_back(parse_cell(cells[c], line_no, c, path));
    }
    rows.push_back(std::move(values));
  }

  table.values.resize(static_cast<Eigen::Index>(table.symbols.size()),
                      static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t i = 0; i < table.symbols.size(); ++i) {
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = rows[t][i];
    }
  }
  return table;
}

template <typename Panel>
void write_table(std::ostream& out, const Panel& panel, const Eigen::MatrixXd& values,
                 const CsvFormat& format) {
  out << format.timestamp_column;
  for (const auto& s : panel.symbols()) out << format.delimiter << s;
  out << '\n';
  for (Eigen::Index t = 0; t < values.cols(); ++t) {
    out << panel.timestamps()[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      out << format.delimiter << format_double(values(i, t));
    }
    out << '\n';
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

PricePanel load_price_csv(const std::string& path, const CsvFormat& format) {
  RawTable t = read_table(path, format);
  return PricePanel(std::move(t.symbols), std::move(t.timestamps), std::move(t.values));
}

ReturnPanel load_return_csv(const std::string& path, const CsvFormat& format) {
  RawTable t = read_table(path, format);
  return ReturnPanel(std::move(t.symbols), std::move(t.timestamps), std::move(t.values));
}

bool csv_is_flagged_returns(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    return t == kReturnsMarker;
  }
  return false;
}

ReturnPanel load_panel_as_returns(const std::string& path, bool force_returns,
                                  const CsvFormat& format) {
  RawTable t = read_table(path, format);
  if (force_returns || t.flagged_returns) {
    return ReturnPanel(std::move(t.symbols), std::move(t.timestamps), std::move(t.values));
  }
  return compute_log_returns(
      PricePanel(std::move(t.symbols), std::move(t.timestamps), std::move(t.values)));
}

void write_price_csv(std::ostream& out, const PricePanel& panel, const CsvFormat& format) {
  write_table(out, panel, panel.prices(), format);
}

void write_return_csv(std::ostream& out, const ReturnPanel& panel, const CsvFormat& format) {
  out << kReturnsMarker << '\n';
  write_table(out, panel, panel.returns(), format);
}

void write_return_csv(const std::string& path, const ReturnPanel& panel, const CsvFormat& format) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  write_return_csv(out, panel, format);
}

}  // namespace utc
