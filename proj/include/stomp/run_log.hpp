#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stomp {

/// One logged point: `metric` took `value` at `x` (an x_name count) during `stage`.
struct LogRecord {
  int run = 0;
  std::string stage;
  std::string x_name;
  double x = 0.0;
  std::string metric;
  double value = 0.0;
};

/// Time-indexed metrics of one run, in emission order.
struct RunLog {
  std::vector<LogRecord> records;

  void add(std::string stage, std::string x_name, double x, std::string metric, double value);
  void append(const RunLog& other);
  void set_run(int run);
};

/// Per-(stage, metric, x) mean and standard error across runs.
struct CurvePoint {
  std::string stage;
  std::string x_name;
  double x = 0.0;
  std::string metric;
  double mean = 0.0;
  double stderr_ = 0.0;
  int count = 0;
};

struct CurveStats {
  std::vector<CurvePoint> points;
};

/// Standard error is the sample standard deviation over sqrt(run count).
/// Throws if runs disagree on the x-grid of any (stage, metric) curve.
CurveStats aggregate(const std::vector<RunLog>& logs);

/// `run,stage,x_name,x,metric,value` with a header row.
void write_log_csv(std::ostream& out, const std::vector<RunLog>& logs);
void write_curves_csv(std::ostream& out, const CurveStats& stats);
/// Round-trip formatting used for every number written to CSV.
std::string format_number(double value);

std::vector<LogRecord> read_log_csv(std::istream& in);

}  // namespace stomp
