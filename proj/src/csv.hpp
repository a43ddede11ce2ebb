#pragma once

// Internal CSV helpers shared by the POI and check-in loaders.

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace trajsim::csv {

std::vector<std::string> split_row(const std::string& line);

// Column name -> index, built from a header row.
class Header {
 public:
  explicit Header(const std::vector<std::string>& names);

  std::optional<std::size_t> find(std::string_view name) const;
  // Throws DataError naming the missing column.
  std::size_t require(std::string_view name) const;

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

// Reads one line, stripping a trailing CR. Returns false at EOF.
bool read_line(std::istream& in, std::string& line);

double parse_double(std::string_view text, std::size_t line_no,
                    std::string_view field);

}  // namespace trajsim::csv
