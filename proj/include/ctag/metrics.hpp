#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctag/ring.hpp"

namespace ctag {

enum class MulPath { value, tag, check };

struct StepCounters {
  std::uint64_t value_mults = 0;
  std::uint64_t tag_mults = 0;
  std::uint64_t check_mults = 0;
  std::uint64_t broadcast_elements = 0;
  std::uint64_t broadcast_bytes = 0;

  StepCounters& operator+=(const StepCounters& o);
  friend bool operator==(const StepCounters&, const StepCounters&) = default;
};

/// One party's multiplication counters, keyed by step label.
class CostLedger {
 public:
  /// Counts multiplications on this thread into (label, path) while alive.
  [[nodiscard]] MulCounterScope attribute(const std::string& label, MulPath path);
  const std::map<std::string, StepCounters>& steps() const noexcept { return steps_; }
  StepCounters& step(const std::string& label) { return steps_[label]; }
  StepCounters at(const std::string& label) const;
  StepCounters total() const;

 private:
  std::map<std::string, StepCounters> steps_;
};

std::uint64_t formula_baseline_tag(std::uint64_t t1, std::uint64_t t2, std::uint64_t t3);
std::uint64_t formula_compact_tag(std::uint64_t t1, std::uint64_t t2, std::uint64_t t3);
/// Value-path products of party 1, which carries the public E*U term.
std::uint64_t formula_baseline_value(std::uint64_t t1, std::uint64_t t2, std::uint64_t t3);
std::uint64_t formula_compact_value(std::uint64_t t1, std::uint64_t t2, std::uint64_t t3);
/// Ring elements each party broadcasts for one multiply-then-truncate (E, U, D).
std::uint64_t formula_broadcast_elements(std::uint64_t t1, std::uint64_t t2, std::uint64_t t3);

inline constexpr int kReportSchemaVersion = 1;

struct ReportRow {
  std::string label;
  std::uint64_t t1 = 0;
  std::uint64_t t2 = 0;
  std::uint64_t t3 = 0;
  std::uint64_t instances = 1;
  StepCounters counters;
  std::uint64_t baseline_tag_formula = 0;
  std::uint64_t compact_tag_formula = 0;
  std::uint64_t baseline_value_formula = 0;
  std::uint64_t compact_value_formula = 0;

  /// baseline / compact tag multiplications (closed form).
  double tag_ratio() const;
  /// Share of this protocol's local multiplications spent on tags.
  double tag_share() const;
  /// Projected local-multiplication speedup of the compact protocol over the
  /// baseline, from counts only.
  double mult_speedup() const;
};

struct CostReport {
  int schema_version = kReportSchemaVersion;
  std::string mode;      // "instrumented" or "formula"
  std::string protocol;  // "baseline" or "compacttag"
  std::string model;
  RingParams params;
  std::size_t parties = 2;
  std::uint64_t seed = 0;
  std::optional<double> wall_seconds;
  std::vector<ReportRow> rows;

  /// Sum of all rows, labelled "total" (shape columns zero).
  ReportRow aggregate() const;
};

enum class ReportFormat { csv, json };
ReportFormat report_format_from_string(std::string_view name);

void emit_report(const CostReport& report, ReportFormat format, std::ostream& os);
/// Writes to `path`; throws std::runtime_error if the file cannot be written.
void emit_report_file(const CostReport& report, ReportFormat format, const std::string& path);
CostReport parse_report_json(std::string_view text);

}  // namespace ctag
