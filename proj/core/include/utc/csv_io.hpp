#pragma once

#include <iosfwd>
#include <string>

#include "utc/returns.hpp"

namespace utc {

/// Layout of the panel CSV files.
///
/// The first column holds ISO-8601 timestamps under the header
/// `timestamp_column`; every other column is one symbol. A file whose
/// first line is the comment `# kind=returns` holds log returns rather
/// than prices.
struct CsvFormat {
  char delimiter = ',';
  std::string timestamp_column = "timestamp";
};

inline constexpr const char* kReturnsMarker = "# kind=returns";

PricePanel load_price_csv(const std::string& path, const CsvFormat& format = {});
ReturnPanel load_return_csv(const std::string& path, const CsvFormat& format = {});

/// Loads either kind of file. Price files are converted with
/// compute_log_returns; files carrying the returns marker (or any file when
/// `force_returns` is set) are read as returns directly.
ReturnPanel load_panel_as_returns(const std::string& path, bool force_returns = false,
                                  const CsvFormat& format = {});

/// True when the file starts with the returns marker line.
bool csv_is_flagged_returns(const std::string& path);

void write_price_csv(std::ostream& out, const PricePanel& panel, const CsvFormat& format = {});
void write_return_csv(std::ostream& out, const ReturnPanel& panel, const CsvFormat& format = {});
void write_return_csv(const std::string& path, const ReturnPanel& panel,
                      const CsvFormat& format = {});

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace utc
