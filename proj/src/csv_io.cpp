#include "camfmc/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "camfmc/errors.hpp"

namespace camfmc::io {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_number(const std::string& cell, const std::string& path, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    while (used < cell.size() &&
           (cell[used] == ' ' || cell[used] == '\t' || cell[used] == '\r'))
      ++used;
    if (used != cell.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error(path + ":" + std::to_string(line_no) + ": cannot parse number '" +
                cell + "'");
  }
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

rates::PilotSeries read_pilot_series(const std::string& path, rates::ValueKind kind) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  rates::PilotSeries series;
  series.kind = kind;
  if (!std::getline(in, line))
    throw Error(path + ": empty file, expected header 'n,value'");
  ++line_no;
  if (strip_cr(line) != "n,value")
    throw Error(path + ":1: expected header 'n,value', got '" + strip_cr(line) + "'");
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2)
      throw Error(path + ":" + std::to_string(line_no) + ": expected 2 columns, got " +
                  std::to_string(cells.size()));
    rates::PilotPoint p;
    p.n = parse_number(cells[0], path, line_no);
    p.value = parse_number(cells[1], path, line_no);
    series.points.push_back(p);
  }
  return series;
}

void write_pilot_series(const std::string& path, const rates::PilotSeries& series) {
  std::ofstream out = open_out(path);
  out << "n,value\n";
  for (const auto& p : series.points)
    out << format_number(p.n) << ',' << format_number(p.value) << '\n';
}

stats::PilotMatrix read_pilot_matrix(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty file");
  const auto header = split_csv_line(strip_cr(line));
  std::size_t d = 0, models = 0;
  for (const auto& h : header) {
    if (h.rfind("theta_", 0) == 0)
      ++d;
    else if (h.rfind("f_", 0) == 0)
      ++models;
    else
      throw Error(path + ":1: unexpected column '" + h + "'");
  }
  if (models == 0) throw Error(path + ":1: no model columns (f_0..f_k)");

  stats::PilotMatrix matrix;
  matrix.dimension = d;
  matrix.model_count = models;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != d + models)
      throw Error(path + ":" + std::to_string(line_no) + ": expected " +
                  std::to_string(d + models) + " columns, got " +
                  std::to_string(cells.size()));
    std::vector<double> input(d), output(models);
    for (std::size_t i = 0; i < d; ++i) input[i] = parse_number(cells[i], path, line_no);
    for (std::size_t j = 0; j < models; ++j)
      output[j] = parse_number(cells[d + j], path, line_no);
    matrix.inputs.push_back(std::move(input));
    matrix.outputs.push_back(std::move(output));
  }
  return matrix;
}

void write_pilot_matrix(const std::string& path, const stats::PilotMatrix& matrix) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < matrix.dimension; ++i)
    out << (i ? "," : "") << "theta_" << (i + 1);
  for (std::size_t j = 0; j < matrix.model_count; ++j)
    out << (matrix.dimension || j ? "," : "") << "f_" << j;
  out << '\n';
  for (std::size_t r = 0; r < matrix.outputs.size(); ++r) {
    bool first = true;
    if (r < matrix.inputs.size())
      for (const double v : matrix.inputs[r]) {
        out << (first ? "" : ",") << format_number(v);
        first = false;
      }
    for (const double v : matrix.outputs[r]) {
      out << (first ? "" : ",") << format_number(v);
      first = false;
    }
    out << '\n';
  }
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

}  // namespace camfmc::io
