#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "insideout/datagen.hpp"

namespace insideout {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  fail(ErrorCode::ParseError, fmt::format("dataset csv line {}: {}", line, what));
}

}  // namespace

std::string dataset_to_csv(const Dataset& ds) {
  require(ds.target.size() == ds.k(), ErrorCode::LengthMismatch,
          "dataset target length does not match feature rows");
  std::string out;
  for (std::size_t i = 0; i < ds.n(); ++i) out += fmt::format("f_{},", i);
  out += "y\n";
  for (std::size_t r = 0; r < ds.k(); ++r) {
    for (double v : ds.features.row(r)) out += fmt::format("{:.17g},", v);
    out += fmt::format("{:.17g}\n", ds.target[r]);
  }
  return out;
}

Dataset dataset_from_csv(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    while (pos < text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      line = trim(text.substr(pos, end - pos));
      pos = end + 1;
      ++line_no;
      if (!line.empty()) return true;
    }
    return false;
  };

  std::string_view header;
  if (!next_line(header)) parse_error(1, "file is empty, expected header f_0,...,f_{n-1},y");
  const auto names = split_fields(header);
  if (names.size() < 2) parse_error(line_no, "header needs at least one feature and y");
  const std::size_t n = names.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (trim(names[i]) != fmt::format("f_{}", i)) {
      parse_error(line_no, fmt::format("header column {} is '{}', expected 'f_{}'", i + 1,
                                       trim(names[i]), i));
    }
  }
  if (trim(names.back()) != "y") parse_error(line_no, "last header column must be 'y'");

  std::vector<double> values;
  std::vector<double> target;
  std::string_view line;
  while (next_line(line)) {
    const auto fields = split_fields(line);
    if (fields.size() != n + 1) {
      parse_error(line_no, fmt::format("row has {} columns, header declares {}", fields.size(),
                                       n + 1));
    }
    for (std::size_t c = 0; c <= n; ++c) {
      const auto f = trim(fields[c]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        parse_error(line_no, fmt::format("column {} value '{}' is not a finite number", c + 1, f));
      }
      if (c < n) {
        values.push_back(v);
      } else {
        target.push_back(v);
      }
    }
  }
  if (target.empty()) parse_error(line_no, "no data rows");
  Dataset ds;
  ds.features = Matrix(target.size(), n, std::move(values));
  ds.target = std::move(target);
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, fmt::format("cannot open '{}' for writing", path.string()));
  out << dataset_to_csv(ds);
  if (!out) fail(ErrorCode::IoError, fmt::format("failed writing '{}'", path.string()));
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return dataset_from_csv(buffer.str());
}

}  // namespace insideout
