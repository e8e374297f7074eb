#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

namespace genius::csv {

// RFC-4180 record reader over an in-memory buffer. Unquoted fields are views
// into the buffer; quoted fields with escaped quotes are materialized
// internally and stay valid until the next call to next().
class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  bool next(std::vector<std::string_view>& fields);

  // 1-based line on which the most recently returned record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
  std::deque<std::string> unescaped_;
};

// Quotes a field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

// Joins already-escaped fields with commas and appends "\n".
std::string join_row(const std::vector<std::string>& fields);

}  // namespace genius::csv
