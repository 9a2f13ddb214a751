#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cabfare::csv {

// Splits the complete RFC-4180 records at the front of `buffer`. Quoted
// fields may contain commas, doubled quotes and line breaks; both LF and
// CRLF terminate a record. When `at_eof` is false an unterminated trailing
// record is left unconsumed. Blank records are dropped.
struct Split {
  std::vector<std::string_view> records;
  std::size_t consumed = 0;
};
Split split_records(std::string_view buffer, bool at_eof);

// Fields of one record with quotes removed and surrounding blanks trimmed
// from unquoted fields.
std::vector<std::string> split_fields(std::string_view record);

std::string_view trim(std::string_view s) noexcept;

}  // namespace cabfare::csv
