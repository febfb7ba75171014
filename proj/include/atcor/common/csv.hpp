#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace atcor {

// Splits one delimited line. Double-quoted fields may contain the
// delimiter; "" inside quotes is a literal quote.
std::vector<std::string> split_fields(std::string_view line, char delim = ',');

// Reads a delimited file with a header row and exposes columns by name.
class DelimitedReader {
 public:
  DelimitedReader(std::istream& in, char delim = ',');

  const std::vector<std::string>& header() const { return header_; }
  std::optional<std::size_t> column(std::string_view name) const;

  // Next non-empty data row; false at end of input.
  bool next(std::vector<std::string>& row);
  std::size_t line_number() const { return line_no_; }

 private:
  std::istream& in_;
  char delim_;
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t line_no_ = 0;
};

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

}  // namespace atcor
