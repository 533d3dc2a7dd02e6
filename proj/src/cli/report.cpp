#include "rcg/report.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#ifndef RCG_VERSION
#define RCG_VERSION "0.0.0"
#endif

namespace rcg::cli {

std::string_view tool_version() noexcept { return RCG_VERSION; }

void Report::add(std::size_t row, std::string item, std::string quantity, double value, std::string unit,
                 std::optional<double> std_error, std::optional<double> tolerance, std::string status) {
    rows.push_back({row, std::move(item), std::move(quantity), value, std_error, tolerance,
                    std::move(unit), std::move(status)});
}

void Report::check(std::size_t row, std::string item, std::string quantity, double value, bool passed,
                   std::string unit, std::optional<double> std_error, std::optional<double> tolerance) {
    if (!passed) failed = true;
    add(row, std::move(item), std::move(quantity), value, std::move(unit), std_error, tolerance,
        passed ? "pass" : "fail");
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string optional_number(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string();
}

}  // namespace

void write_csv(const Report& report, std::ostream& out) {
    out << "schema,tool_version,command,seed,config_hash,row,item,quantity,value,std_error,tolerance,unit,status\r\n";
    const std::string prefix = std::to_string(kSchemaVersion) + "," + std::string(tool_version()) + "," +
                               csv_field(report.command) + "," + std::to_string(report.seed) + "," +
                               csv_field(report.config_hash) + ",";
    for (const ReportRow& r : report.rows) {
        out << prefix << r.row << ',' << csv_field(r.item) << ',' << csv_field(r.quantity) << ','
            << format_number(r.value) << ',' << optional_number(r.std_error) << ','
            << optional_number(r.tolerance) << ',' << csv_field(r.unit) << ',' << r.status << "\r\n";
    }
}

void write_json(const Report& report, std::ostream& out) {
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["schema"] = kSchemaVersion;
    doc["tool_version"] = std::string(tool_version());
    doc["command"] = report.command;
    doc["seed"] = report.seed;
    doc["config_hash"] = report.config_hash;
    // numbers as the same 17-digit strings the CSV writer emits
    ordered_json rows = ordered_json::array();
    for (const ReportRow& r : report.rows) {
        ordered_json row;
        row["row"] = r.row;
        row["item"] = r.item;
        row["quantity"] = r.quantity;
        row["value"] = format_number(r.value);
        row["std_error"] = r.std_error ? ordered_json(format_number(*r.std_error)) : ordered_json(nullptr);
        row["tolerance"] = r.tolerance ? ordered_json(format_number(*r.tolerance)) : ordered_json(nullptr);
        row["unit"] = r.unit;
        row["status"] = r.status;
        rows.push_back(std::move(row));
    }
    doc["rows"] = std::move(rows);
    doc["failed"] = report.failed;
    out << doc.dump(2) << '\n';
}

void write_report(const Report& report, OutputFormat format, std::ostream& out) {
    if (format == OutputFormat::Json) write_json(report, out);
    else write_csv(report, out);
}

}  // namespace rcg::cli
