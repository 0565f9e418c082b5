#include "ctag/metrics.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ctag {

StepCounters& StepCounters::operator+=(const StepCounters& o) {
  value_mults += o.value_mults;
  tag_mults += o.tag_mults;
  check_mults += o.check_mults;
  broadcast_elements += o.broadcast_elements;
  broadcast_bytes += o.broadcast_bytes;
  return *this;
}

MulCounterScope CostLedger::attribute(const std::string& label, MulPath path) {
  StepCounters& s = steps_[label];
  switch (path) {
    case MulPath::value: return MulCounterScope(&s.value_mults);
    case MulPath::tag: return MulCounterScope(&s.tag_mults);
    case MulPath::check: return MulCounterScope(&s.check_mults);
  }
  return MulCounterScope(nullptr);
}

StepCounters CostLedger::at(const std::string& label) const {
  auto it = steps_.find(label);
  return it == steps_.end() ? StepCounters{} : it->second;
}

StepCounters CostLedger::total() const {
  StepCounters out;
  for (const auto& [label, c] : steps_) out += c;
  return out;
}

std::uint64_t formula_baseline_tag(std::uint64_t t1, std::uint64_t t2, std::uint64_t t3) {
  return 3 * t1 * t2 * t3 + t1 * t3;
}

std::uint64_t formula_compact_tag(std::uint64_t t1, std::uint64_t t2, std::uint64_t t3) {
  return 4 * t1 * t3 + 2 * t2 * t3 + 3 * t1 * t2 + t1;
}

std::uint64_t formula_baseline_value(std::uint64_t t1, std::uint64_t t2, std::uint64_t t3) {
  return 2 * t1 * t2 * t3;
}

std::uint64_t formula_compact_value(std::uint64_t t1, std::uint64_t t2, std::uint64_t t3) {
  return 3 * t1 * t2 * t3;
}

std::uint64_t formula_broadcast_elements(std::uint64_t t1, std::uint64_t t2, std::uint64_t t3) {
  return t1 * t2 + t2 * t3 + t1 * t3;
}

double ReportRow::tag_ratio() const {
  return compact_tag_formula == 0 ? 0.0
                                  : static_cast<double>(baseline_tag_formula) /
                                        static_cast<double>(compact_tag_formula);
}

double ReportRow::tag_share() const {
  const auto total = counters.tag_mults + counters.value_mults;
  return total == 0 ? 0.0 : static_cast<double>(counters.tag_mults) / static_cast<double>(total);
}

double ReportRow::mult_speedup() const {
  const double base = static_cast<double>(baseline_tag_formula + baseline_value_formula);
  const double comp = static_cast<double>(compact_tag_formula + compact_value_formula);
  return comp == 0.0 ? 0.0 : base / comp;
}

ReportRow CostReport::aggregate() const {
  ReportRow total;
  total.label = "total";
  total.instances = 0;
  for (const auto& r : rows) {
    total.counters += r.counters;
    total.baseline_tag_formula += r.baseline_tag_formula;
    total.compact_tag_formula += r.compact_tag_formula;
    total.baseline_value_formula += r.baseline_value_formula;
    total.compact_value_formula += r.compact_value_formula;
  }
  return total;
}

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw std::invalid_argument("unknown report format '" + std::string(name) + "'");
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

void emit_csv(const CostReport& r, std::ostream& os) {
  os << "schema_version,mode,protocol,model,k,s,f,parties,label,t1,t2,t3,instances,tag_mults,"
        "value_mults,check_mults,broadcast_elements,broadcast_bytes,baseline_tag_formula,"
        "compact_tag_formula,baseline_value_formula,compact_value_formula,tag_ratio,tag_share,"
        "mult_speedup\n";
  for (const auto& row : r.rows) {
    os << r.schema_version << ',' << r.mode << ',' << r.protocol << ',' << r.model << ',' << r.params.k
       << ',' << r.params.s << ',' << r.params.f << ',' << r.parties << ',' << row.label << ','
       << row.t1 << ',' << row.t2 << ',' << row.t3 << ',' << row.instances << ','
       << row.counters.tag_mults << ',' << row.counters.value_mults << ',' << row.counters.check_mults
       << ',' << row.counters.broadcast_elements << ',' << row.counters.broadcast_bytes << ','
       << row.baseline_tag_formula << ',' << row.compact_tag_formula << ','
       << row.baseline_value_formula << ',' << row.compact_value_formula << ','
       << fmt_double(row.tag_ratio()) << ',' << fmt_double(row.tag_share()) << ','
       << fmt_double(row.mult_speedup()) << '\n';
  }
}

nlohmann::json row_json(const ReportRow& row) {
  return {{"label", row.label},
          {"t1", row.t1},
          {"t2", row.t2},
          {"t3", row.t3},
          {"instances", row.instances},
          {"tag_mults", row.counters.tag_mults},
          {"value_mults", row.counters.value_mults},
          {"check_mults", row.counters.check_mults},
          {"broadcast_elements", row.counters.broadcast_elements},
          {"broadcast_bytes", row.counters.broadcast_bytes},
          {"baseline_tag_formula", row.baseline_tag_formula},
          {"compact_tag_formula", row.compact_tag_formula},
          {"baseline_value_formula", row.baseline_value_formula},
          {"compact_value_formula", row.compact_value_formula},
          {"tag_ratio", row.tag_ratio()},
          {"tag_share", row.tag_share()},
          {"mult_speedup", row.mult_speedup()}};
}

void emit_json(const CostReport& r, std::ostream& os) {
  nlohmann::json doc;
  doc["schema_version"] = r.schema_version;
  doc["mode"] = r.mode;
  doc["protocol"] = r.protocol;
  doc["model"] = r.model;
  doc["params"] = {{"k", r.params.k}, {"s", r.params.s}, {"f", r.params.f}};
  doc["parties"] = r.parties;
  doc["seed"] = r.seed;
  doc["wall_seconds"] = r.wall_seconds ? nlohmann::json(*r.wall_seconds) : nlohmann::json(nullptr);
  doc["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) doc["rows"].push_back(row_json(row));
  if (!r.rows.empty()) doc["aggregate"] = row_json(r.aggregate());
  os << doc.dump(2) << '\n';
}

}  // namespace

void emit_report(const CostReport& report, ReportFormat format, std::ostream& os) {
  if (format == ReportFormat::csv) {
    emit_csv(report, os);
  } else {
    emit_json(report, os);
  }
}

void emit_report_file(const CostReport& report, ReportFormat format, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write report to " + path);
  emit_report(report, format, os);
  os.flush();
  if (!os) throw std::runtime_error("failed writing report to " + path);
}

CostReport parse_report_json(std::string_view text) {
  auto doc = nlohmann::json::parse(text);
  CostReport r;
  r.schema_version = doc.at("schema_version").get<int>();
  if (r.schema_version != kReportSchemaVersion) {
    throw std::invalid_argument("unsupported report schema version " + std::to_string(r.schema_version));
  }
  r.mode = doc.at("mode").get<std::string>();
  r.protocol = doc.at("protocol").get<std::string>();
  r.model = doc.value("model", std::string{});
  r.params.k = doc.at("params").at("k").get<unsigned>();
  r.params.s = doc.at("params").at("s").get<unsigned>();
  r.params.f = doc.at("params").at("f").get<unsigned>();
  r.parties = doc.at("parties").get<std::size_t>();
  r.seed = doc.at("seed").get<std::uint64_t>();
  if (!doc.at("wall_seconds").is_null()) r.wall_seconds = doc.at("wall_seconds").get<double>();
  for (const auto& j : doc.at("rows")) {
    ReportRow row;
    row.label = j.at("label").get<std::string>();
    row.t1 = j.at("t1").get<std::uint64_t>();
    row.t2 = j.at("t2").get<std::uint64_t>();
    row.t3 = j.at("t3").get<std::uint64_t>();
    row.instances = j.at("instances").get<std::uint64_t>();
    row.counters.tag_mults = j.at("tag_mults").get<std::uint64_t>();
    row.counters.value_mults = j.at("value_mults").get<std::uint64_t>();
    row.counters.check_mults = j.at("check_mults").get<std::uint64_t>();
    row.counters.broadcast_elements = j.at("broadcast_elements").get<std::uint64_t>();
    row.counters.broadcast_bytes = j.at("broadcast_bytes").get<std::uint64_t>();
    row.baseline_tag_formula = j.at("baseline_tag_formula").get<std::uint64_t>();
    row.compact_tag_formula = j.at("compact_tag_formula").get<std::uint64_t>();
    row.baseline_value_formula = j.at("baseline_value_formula").get<std::uint64_t>();
    row.compact_value_formula = j.at("compact_value_formula").get<std::uint64_t>();
    r.rows.push_back(std::move(row));
  }
  return r;
}

}  // namespace ctag
