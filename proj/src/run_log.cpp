#include "stomp/run_log.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace stomp {

void RunLog::add(std::string stage, std::string x_name, double x, std::string metric, double value) {
  records.push_back({0, std::move(stage), std::move(x_name), x, std::move(metric), value});
}

void RunLog::append(const RunLog& other) {
  records.insert(records.end(), other.records.begin(), other.records.end());
}

void RunLog::set_run(int run) {
  for (LogRecord& r : records) r.run = run;
}

namespace {

using CurveKey = std::tuple<std::string, std::string, std::string>;  // stage, x_name, metric

struct Curve {
  std::vector<double> xs;
  std::vector<double> values;
};

struct KeyedCurves {
  std::vector<CurveKey> order;
  std::map<CurveKey, Curve> curves;
};

KeyedCurves split(const RunLog& log) {
  KeyedCurves out;
  for (const LogRecord& r : log.records) {
    CurveKey key{r.stage, r.x_name, r.metric};
    auto [it, inserted] = out.curves.try_emplace(key);
    if (inserted) out.order.push_back(key);
    it->second.xs.push_back(r.x);
    it->second.values.push_back(r.value);
  }
  return out;
}

void check_field(const std::string& s) {
  if (s.find_first_of(",\n\r\"") != std::string::npos) {
    throw std::invalid_argument("CSV field contains a separator: '" + s + "'");
  }
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    // from_chars rejects "inf"/"nan" spellings that other writers produce.
    try {
      std::size_t used = 0;
      v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw std::runtime_error("CSV: not a number: '" + s + "'");
    }
  }
  return v;
}

}  // namespace

CurveStats aggregate(const std::vector<RunLog>& logs) {
  if (logs.empty()) throw std::invalid_argument("aggregate needs at least one run");
  std::vector<KeyedCurves> runs;
  runs.reserve(logs.size());
  for (const RunLog& log : logs) runs.push_back(split(log));

  CurveStats stats;
  const KeyedCurves& first = runs.front();
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].curves.size() != first.curves.size()) throw std::invalid_argument("runs log different metric sets");
  }
  for (const CurveKey& key : first.order) {
    const Curve& ref = first.curves.at(key);
    for (std::size_t r = 1; r < runs.size(); ++r) {
      const auto it = runs[r].curves.find(key);
      if (it == runs[r].curves.end() || it->second.xs != ref.xs) {
        throw std::invalid_argument("mismatched x-grid for metric '" + std::get<2>(key) + "'");
      }
    }
    const auto n = static_cast<double>(runs.size());
    for (std::size_t i = 0; i < ref.xs.size(); ++i) {
      double sum = 0.0;
      for (const KeyedCurves& run : runs) sum += run.curves.at(key).values[i];
      const double mean = sum / n;
      double sq = 0.0;
      for (const KeyedCurves& run : runs) {
        const double d = run.curves.at(key).values[i] - mean;
        sq += d * d;
      }
      const double stderr_ = runs.size() > 1 ? std::sqrt(sq / (n - 1.0)) / std::sqrt(n) : 0.0;
      stats.points.push_back(
          {std::get<0>(key), std::get<1>(key), ref.xs[i], std::get<2>(key), mean, stderr_, static_cast<int>(runs.size())});
    }
  }
  return stats;
}

std::string format_number(double value) {
  char buf[64];
  // Whole numbers print as integers; shortest round-trip form otherwise.
  if (value == std::trunc(value) && std::abs(value) < 1e15) {
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(value));
    return std::string(buf, ptr);
  }
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

void write_log_csv(std::ostream& out, const std::vector<RunLog>& logs) {
  out << "run,stage,x_name,x,metric,value\n";
  for (const RunLog& log : logs) {
    for (const LogRecord& r : log.records) {
      check_field(r.stage);
      check_field(r.x_name);
      check_field(r.metric);
      out << r.run << ',' << r.stage << ',' << r.x_name << ',' << format_number(r.x) << ',' << r.metric << ','
          << format_number(r.value) << '\n';
    }
  }
}

void write_curves_csv(std::ostream& out, const CurveStats& stats) {
  out << "stage,x_name,x,metric,mean,stderr,count\n";
  for (const CurvePoint& p : stats.points) {
    out << p.stage << ',' << p.x_name << ',' << format_number(p.x) << ',' << p.metric << ',' << format_number(p.mean)
        << ',' << format_number(p.stderr_) << ',' << p.count << '\n';
  }
}

std::vector<LogRecord> read_log_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "run,stage,x_name,x,metric,value") {
    throw std::runtime_error("CSV: expected header run,stage,x_name,x,metric,value");
  }
  std::vector<LogRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw std::runtime_error("CSV: line " + std::to_string(line_no) + " has " +
                                                    std::to_string(cells.size()) + " fields, expected 6");
    LogRecord r;
    r.run = std::stoi(cells[0]);
    r.stage = cells[1];
    r.x_name = cells[2];
    r.x = parse_double(cells[3]);
    r.metric = cells[4];
    r.value = parse_double(cells[5]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace stomp
