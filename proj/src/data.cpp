#include "truncox/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include "truncox/errors.hpp"

namespace truncox {

const char* to_string(TruncationMode mode) {
  switch (mode) {
    case TruncationMode::doubly: return "double";
    case TruncationMode::left_only: return "left-only";
    case TruncationMode::right_only: return "right-only";
    case TruncationMode::none: return "none";
  }
  return "?";
}

TruncatedDataset TruncatedDataset::from_records(std::vector<SubjectRecord> records) {
  if (records.empty()) throw EmptyDataset();

  TruncatedDataset ds;
  const std::size_t p = records.front().z.size();
  bool any_left = false, any_right = false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SubjectRecord& rec = records[i];
    if (!std::isfinite(rec.t) || rec.t <= 0.0)
      throw ValidationError("record " + std::to_string(i + 1) +
                            ": event time must be finite and > 0");
    if (std::isnan(rec.l) || std::isnan(rec.r) || rec.l == std::numeric_limits<double>::infinity() ||
        rec.r == -std::numeric_limits<double>::infinity())
      throw ValidationError("record " + std::to_string(i + 1) + ": bad truncation bounds");
    if (!(rec.l <= rec.t && rec.t <= rec.r)) throw TruncationViolation(i + 1);
    if (rec.z.size() != p)
      throw ValidationError("record " + std::to_string(i + 1) +
                            ": covariate dimension mismatch");
    for (double zv : rec.z)
      if (!std::isfinite(zv))
        throw ValidationError("record " + std::to_string(i + 1) + ": non-finite covariate");
    any_left = any_left || std::isfinite(rec.l);
    any_right = any_right || std::isfinite(rec.r);
  }

  auto [times, tau] = distinct_failure_times(records);
  ds.distinct_times = std::move(times);
  ds.tau = tau;
  ds.n = records.size();
  ds.d = ds.distinct_times.size();
  ds.p = p;
  ds.mode = any_left ? (any_right ? TruncationMode::doubly : TruncationMode::left_only)
                     : (any_right ? TruncationMode::right_only : TruncationMode::none);

  ds.event_index.resize(ds.n);
  for (std::size_t i = 0; i < ds.n; ++i) {
    auto it = std::lower_bound(ds.distinct_times.begin(), ds.distinct_times.end(), records[i].t);
    ds.event_index[i] = static_cast<std::size_t>(it - ds.distinct_times.begin());
  }
  ds.records = std::move(records);
  return ds;
}

std::pair<std::vector<double>, double> distinct_failure_times(
    const std::vector<SubjectRecord>& records) {
  if (records.empty()) throw EmptyDataset();
  std::vector<double> times;
  times.reserve(records.size());
  for (const SubjectRecord& rec : records) times.push_back(rec.t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return {times, times.back()};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col,
                  const CsvSchema& schema, bool allow_sentinel) {
  if (allow_sentinel) {
    if (cell == schema.neg_inf_token) return -std::numeric_limits<double>::infinity();
    if (cell == schema.pos_inf_token) return std::numeric_limits<double>::infinity();
  }
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw NonNumericCell(row, col, cell);
  return value;
}

std::string format_value(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

TruncatedDataset load_dataset(const std::string& path, const CsvSchema& schema,
                              bool skip_invalid, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty file: " + path);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const std::vector<std::string> header = split_csv_line(line);

  auto col_of = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw MissingColumn(name);
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t ct = col_of(schema.time_col);
  const std::size_t cl = col_of(schema.left_col);
  const std::size_t cr = col_of(schema.right_col);

  std::vector<std::size_t> zcols;
  std::vector<std::string> znames;
  if (schema.covariate_cols.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (c != ct && c != cl && c != cr) {
        zcols.push_back(c);
        znames.push_back(header[c]);
      }
  } else {
    for (const std::string& name : schema.covariate_cols) {
      zcols.push_back(col_of(name));
      znames.push_back(name);
    }
  }
  if (zcols.empty()) throw MissingColumn("<covariate>");

  std::vector<SubjectRecord> records;
  std::size_t row = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() < header.size())
      throw ValidationError("row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()));
    SubjectRecord rec;
    rec.t = parse_cell(cells[ct], row, schema.time_col, schema, false);
    rec.l = parse_cell(cells[cl], row, schema.left_col, schema, true);
    rec.r = parse_cell(cells[cr], row, schema.right_col, schema, true);
    rec.z.reserve(zcols.size());
    for (std::size_t k = 0; k < zcols.size(); ++k)
      rec.z.push_back(parse_cell(cells[zcols[k]], row, znames[k], schema, false));

    if (report) ++report->rows_read;
    const bool valid = std::isfinite(rec.t) && rec.t > 0.0 && rec.l <= rec.t && rec.t <= rec.r;
    if (!valid) {
      if (!skip_invalid) throw TruncationViolation(row);
      if (report) {
        ++report->rows_skipped;
        report->violations.push_back("row " + std::to_string(row) +
                                     ": l <= t <= r violated, record skipped");
      }
      continue;
    }
    records.push_back(std::move(rec));
  }

  return TruncatedDataset::from_records(std::move(records));
}

void write_dataset(const std::string& path, const TruncatedDataset& dataset,
                   const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);

  out << schema.time_col << ',' << schema.left_col << ',' << schema.right_col;
  if (schema.covariate_cols.empty()) {
    for (std::size_t k = 0; k < dataset.p; ++k) out << ",z" << (k + 1);
  } else {
    for (const std::string& name : schema.covariate_cols) out << ',' << name;
  }
  out << '\n';

  for (const SubjectRecord& rec : dataset.records) {
    out << format_value(rec.t) << ',';
    if (std::isinf(rec.l))
      out << schema.neg_inf_token;
    else
      out << format_value(rec.l);
    out << ',';
    if (std::isinf(rec.r))
      out << schema.pos_inf_token;
    else
      out << format_value(rec.r);
    for (double zv : rec.z) out << ',' << format_value(zv);
    out << '\n';
  }
}

}  // namespace truncox
