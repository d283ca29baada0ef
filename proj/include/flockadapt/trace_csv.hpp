#pragma once

// Trace CSV layout:
//
//   # flockadapt trace
//   # <effective scenario, one line per key>
//   #! <default substitution notices>
//   time_s,a1_phase_rad,a1_rate_radps,a1_speed_mps,a1_x_rad,...,
//          shift_1-2_rad,desired_1-2_1_rad,desired_1-2_2_rad,...,E,V
//
// Agent columns come in agent order, edge columns in order of first
// appearance. Values use 9 significant digits; a cell is empty while its
// agent or edge does not exist.

#include <flockadapt/engine.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace flockadapt {

constexpr int csv_significant_digits = 9;

/// Column names for a trace, in file order.
std::vector<std::string> trace_columns(const Trace& trace);

void write_trace_csv(const Trace& trace, std::ostream& out);
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);

/// Rebuilds a trace (scenario, columns and samples) from CSV text. Columns not
/// stored in the file (coupling, radius, lyapunov rate) are left NaN.
Trace read_trace_csv_text(const std::string& text);
Trace read_trace_csv(const std::filesystem::path& path);

/// Formats with csv_significant_digits, "C" locale semantics.
std::string format_csv_number(double value);

/// Half a unit in the last stored digit: the worst rounding error of a CSV value.
double csv_resolution(double value);

} // namespace flockadapt
