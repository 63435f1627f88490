#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace zsg {

// One measurement row. (run_id, seed, t, metric, state) is unique within an
// experiment.
struct TraceRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  long t = 0;
  std::string metric;
  double value = 0.0;
  int state = -1;  // -1: not state-indexed; serialized as an empty field
  std::uint64_t config_hash = 0;
};

struct SummaryRow {
  std::string metric;
  long t = 0;
  int state = -1;
  int count = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

inline std::uint64_t fnv1a_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// 17 significant digits round-trip doubles exactly; '.' decimal regardless of
// locale (snprintf with the C locale assumption holds here, no locale is set).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

inline std::string trace_header() { return "run_id,seed,t,metric,value,state,config_hash"; }

inline std::string trace_row(const TraceRecord& r) {
  std::string out;
  out += r.run_id;
  out += ',';
  out += std::to_string(r.seed);
  out += ',';
  out += std::to_string(r.t);
  out += ',';
  out += r.metric;
  out += ',';
  out += format_double(r.value);
  out += ',';
  if (r.state >= 0) out += std::to_string(r.state);
  out += ',';
  out += hash_hex(r.config_hash);
  return out;
}

inline void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& records) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open trace file for writing: " + path);
  f << trace_header() << '\n';
  for (const TraceRecord& r : records) f << trace_row(r) << '\n';
}

// Linear-interpolation quantile of a sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.5);
}

inline std::string summary_header() { return "metric,t,state,count,median,q25,q75"; }

inline std::string summary_row(const SummaryRow& r) {
  std::string out;
  out += r.metric;
  out += ',';
  out += std::to_string(r.t);
  out += ',';
  if (r.state >= 0) out += std::to_string(r.state);
  out += ',';
  out += std::to_string(r.count);
  out += ',';
  out += format_double(r.median);
  out += ',';
  out += format_double(r.q25);
  out += ',';
  out += format_double(r.q75);
  return out;
}

inline void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open summary file for writing: " + path);
  f << summary_header() << '\n';
  for (const SummaryRow& r : rows) f << summary_row(r) << '\n';
}

}  // namespace zsg
