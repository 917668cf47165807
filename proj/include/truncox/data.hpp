#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace truncox {

// Truncation sentinels are IEEE infinities: l = -inf means "no left
// truncation", r = +inf means "no right truncation". They are never
// encoded as large finite numbers; code that touches them branches on
// std::isinf so no exp(-Lambda * e^{beta'z}) ever overflows.
struct SubjectRecord {
  double t = 0.0;          // event time, finite and > 0
  double l = 0.0;          // left truncation time, -inf allowed
  double r = 0.0;          // right truncation time, +inf allowed
  std::vector<double> z;   // covariates, same length for all records
};

enum class TruncationMode { doubly, left_only, right_only, none };

const char* to_string(TruncationMode mode);

// Validated, immutable collection of records plus the derived ordered
// distinct failure times t_1 < ... < t_d. Safe to share across threads.
struct TruncatedDataset {
  std::vector<SubjectRecord> records;
  std::vector<double> distinct_times;    // strictly increasing, size d
  std::vector<std::size_t> event_index;  // j(i): position of records[i].t in distinct_times
  std::size_t n = 0;                     // record count
  std::size_t d = 0;                     // distinct event time count
  std::size_t p = 0;                     // covariate dimension
  double tau = 0.0;                      // max observed event time = distinct_times.back()
  TruncationMode mode = TruncationMode::none;

  // Validates invariants (l <= t <= r, t finite positive, uniform p),
  // derives distinct times, tau, event indices and the truncation mode.
  // Throws TruncationViolation / EmptyDataset / ValidationError.
  static TruncatedDataset from_records(std::vector<SubjectRecord> records);
};

// beta plus the baseline hazard jumps at the dataset's distinct times.
struct ParameterState {
  std::vector<double> beta;
  std::vector<double> lambda;  // size d, entries > 0
};

// (t_1..t_d, tau) of a record list. Throws EmptyDataset.
std::pair<std::vector<double>, double> distinct_failure_times(
    const std::vector<SubjectRecord>& records);

struct CsvSchema {
  std::string time_col = "time";
  std::string left_col = "left";
  std::string right_col = "right";
  // Empty: every other column is taken as a covariate in header order.
  std::vector<std::string> covariate_cols;
  std::string neg_inf_token = "-inf";
  std::string pos_inf_token = "inf";
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_skipped = 0;
  std::vector<std::string> violations;  // human-readable, one per bad row
};

// Loads a header-full CSV into a validated dataset. A record violating
// l <= t <= r aborts with TruncationViolation unless skip_invalid is set,
// in which case it is dropped and reported through `report`.
TruncatedDataset load_dataset(const std::string& path, const CsvSchema& schema = {},
                              bool skip_invalid = false, LoadReport* report = nullptr);

// Inverse of load_dataset: finite values round-trip bit-for-bit, sentinels
// round-trip as the schema's tokens.
void write_dataset(const std::string& path, const TruncatedDataset& dataset,
                   const CsvSchema& schema = {});

}  // namespace truncox
