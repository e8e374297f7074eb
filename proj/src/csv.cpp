#include "genius/csv.hpp"

#include <fmt/format.h>

#include "genius/error.hpp"

namespace genius::csv {

bool Reader::next(std::vector<std::string_view>& fields) {
  fields.clear();
  unescaped_.clear();
  if (pos_ >= data_.size()) return false;
  record_line_ = line_;

  while (true) {
    if (pos_ < data_.size() && data_[pos_] == '"') {
      const std::size_t start_line = line_;
      ++pos_;
      std::string value;
      bool closed = false;
      while (pos_ < data_.size()) {
        const char c = data_[pos_];
        if (c == '"') {
          if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '"') {
            value.push_back('"');
            pos_ += 2;
            continue;
          }
          ++pos_;
          closed = true;
          break;
        }
        if (c == '\n') ++line_;
        value.push_back(c);
        ++pos_;
      }
      if (!closed) {
        throw Error(Errc::kMalformedCsv, fmt::format("unterminated quoted field starting on line {}", start_line));
      }
      unescaped_.push_back(std::move(value));
      fields.emplace_back(unescaped_.back());
      if (pos_ < data_.size() && data_[pos_] != ',' && data_[pos_] != '\n' && data_[pos_] != '\r') {
        throw Error(Errc::kMalformedCsv, fmt::format("unexpected character after closing quote on line {}", line_));
      }
    } else {
      const std::size_t begin = pos_;
      while (pos_ < data_.size() && data_[pos_] != ',' && data_[pos_] != '\n' && data_[pos_] != '\r') {
        ++pos_;
      }
      fields.emplace_back(data_.substr(begin, pos_ - begin));
    }

    if (pos_ >= data_.size()) return true;
    const char sep = data_[pos_];
    if (sep == ',') {
      ++pos_;
      continue;
    }
    if (sep == '\r') ++pos_;
    if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
    ++line_;
    return true;
  }
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += fields[i];
  }
  out.push_back('\n');
  return out;
}

}  // namespace genius::csv
