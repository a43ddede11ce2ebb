#include "csv.hpp"

#include <boost/tokenizer.hpp>
#include <charconv>
#include <cmath>

#include "trajsim/errors.hpp"

namespace trajsim::csv {

std::vector<std::string> split_row(const std::string& line) {
  using Separator = boost::escaped_list_separator<char>;
  boost::tokenizer<Separator> tokens(line, Separator('\\', ',', '"'));
  try {
    return {tokens.begin(), tokens.end()};
  } catch (const boost::escaped_list_error& e) {
    throw DataError(std::string("malformed CSV quoting: ") + e.what());
  }
}

Header::Header(const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::string name = names[i];
    // Tolerate a UTF-8 BOM on the first column.
    if (i == 0 && name.rfind("\xEF\xBB\xBF", 0) == 0) name.erase(0, 3);
    index_.emplace(std::move(name), i);
  }
}

std::optional<std::size_t> Header::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Header::require(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw DataError("line 1: missing required column '" + std::string(name) +
                  "'");
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

double parse_double(std::string_view text, std::size_t line_no,
                    std::string_view field) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first != last && *first == ' ') ++first;
  while (last != first && *(last - 1) == ' ') --last;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last ||
      !std::isfinite(value)) {
    throw DataError("line " + std::to_string(line_no) + ": field '" +
                    std::string(field) + "': not a number: '" +
                    std::string(text) + "'");
  }
  return value;
}

}  // namespace trajsim::csv
