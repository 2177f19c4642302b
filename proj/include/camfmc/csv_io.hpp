#pragma once

#include <string>
#include <vector>

#include "camfmc/rates.hpp"
#include "camfmc/stats.hpp"

namespace camfmc::io {

// 17-significant-digit scientific form used for every CSV number.
std::string format_number(double v);

// Pilot series CSV: header `n,value`, decimal points, no thousands
// separators. Parse errors name the offending line.
rates::PilotSeries read_pilot_series(const std::string& path, rates::ValueKind kind);
void write_pilot_series(const std::string& path, const rates::PilotSeries& series);

// Pilot matrix CSV: header `theta_1..theta_d,f_0..f_k`, one row per sample.
stats::PilotMatrix read_pilot_matrix(const std::string& path);
void write_pilot_matrix(const std::string& path, const stats::PilotMatrix& matrix);

// Minimal table writer for the CLI artifacts: one header row, then rows of
// preformatted cells.
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

}  // namespace camfmc::io
