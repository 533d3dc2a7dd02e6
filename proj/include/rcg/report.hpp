#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rcg/config.hpp"

namespace rcg::cli {

/// Version of the fixed output columns; bump when they change.
inline constexpr int kSchemaVersion = 1;

std::string_view tool_version() noexcept;

struct ReportRow {
    std::size_t row = 0;         // record index within the command's table
    std::string item;            // what the row is about: strategy tag, measure, instance
    std::string quantity;        // name of the reported number
    double value = 0.0;
    std::optional<double> std_error;
    std::optional<double> tolerance;
    std::string unit;
    std::string status;          // "pass", "fail" or empty for plain data
};

struct Report {
    std::string command;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<ReportRow> rows;
    bool failed = false;

    void add(std::size_t row, std::string item, std::string quantity, double value, std::string unit,
             std::optional<double> std_error = std::nullopt,
             std::optional<double> tolerance = std::nullopt, std::string status = {});
    /// Records a pass/fail outcome; any failure marks the report as failed.
    void check(std::size_t row, std::string item, std::string quantity, double value, bool passed,
               std::string unit, std::optional<double> std_error = std::nullopt,
               std::optional<double> tolerance = std::nullopt);
};

/// RFC 4180 CSV with columns
///   schema,tool_version,command,seed,config_hash,row,item,quantity,value,std_error,tolerance,unit,status
/// Numbers use 17 significant digits.
void write_csv(const Report& report, std::ostream& out);

/// The same records as a JSON document.
void write_json(const Report& report, std::ostream& out);

void write_report(const Report& report, OutputFormat format, std::ostream& out);

/// 17-significant-digit rendering shared by the writers.
std::string format_number(double value);

}  // namespace rcg::cli
