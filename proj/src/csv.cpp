#include "cabfare/csv.hpp"

namespace cabfare::csv {

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

Split split_records(std::string_view buffer, bool at_eof) {
  Split out;
  bool quoted = false;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    std::string_view rec = buffer.substr(start, end - start);
    if (!rec.empty() && rec.back() == '\r') rec.remove_suffix(1);
    if (!rec.empty()) out.records.push_back(rec);
  };
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const char c = buffer[i];
    if (c == '"') {
      quoted = !quoted;  // a doubled quote toggles twice
    } else if (c == '\n' && !quoted) {
      emit(i);
      start = i + 1;
    }
  }
  if (at_eof && start < buffer.size()) {
    emit(buffer.size());
    start = buffer.size();
  }
  out.consumed = start;
  return out;
}

std::vector<std::string> split_fields(std::string_view record) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < record.size(); ++i) {
    const char c = record[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < record.size() && record[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? std::move(cur) : std::string(trim(cur)));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(was_quoted ? std::move(cur) : std::string(trim(cur)));
  return fields;
}

}  // namespace cabfare::csv
