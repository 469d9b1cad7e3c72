#pragma once

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "modschr/csv.hpp"
#include "modschr/field.hpp"

namespace modschr {

// Field CSV layout: `index_axis0[,index_axis1[,index_axis2]],value_re[,value_im]`,
// one row per cell in flattened order, LF line endings, 17 significant digits.

namespace detail {

inline void write_header(std::ostream& out, std::size_t dims, bool complex_values)
{
  for (std::size_t a = 0; a < dims; ++a)
    out << "index_axis" << a << ',';
  out << "value_re";
  if (complex_values)
    out << ",value_im";
  out << '\n';
}

inline void write_indices(std::ostream& out, const Grid& g, std::size_t flat)
{
  const auto idx = g.unflatten(flat);
  for (std::size_t a = 0; a < g.dims(); ++a)
    out << idx[a] << ',';
}

struct ParsedRows {
  std::vector<Grid::Index> indices;
  std::vector<std::vector<double>> values;
  std::size_t dims = 0;
  std::size_t n_values = 0;
};

inline ParsedRows parse_field_rows(std::istream& in)
{
  ParsedRows rows;
  std::string line;
  std::size_t line_no = 0;
  if (!csv::read_line(in, line))
    throw CsvError(1, "empty field file");
  ++line_no;
  const auto header = csv::split(line);
  for (const auto& col : header) {
    const auto c = csv::trim(col);
    if (c.starts_with("index_axis"))
      ++rows.dims;
    else if (c == "value_re" || c == "value_im")
      ++rows.n_values;
    else
      throw CsvError(line_no, "unknown column '" + std::string(c) + "'");
  }
  if (rows.dims < 1 || rows.dims > Grid::max_dims || rows.n_values < 1)
    throw CsvError(line_no, "header must list 1-3 index columns and values");

  while (csv::read_line(in, line)) {
    ++line_no;
    if (csv::trim(line).empty())
      continue;
    const auto cols = csv::split(line);
    if (cols.size() != rows.dims + rows.n_values)
      throw CsvError(line_no, "expected " +
                                  std::to_string(rows.dims + rows.n_values) +
                                  " columns, found " + std::to_string(cols.size()));
    Grid::Index idx{0, 0, 0};
    for (std::size_t a = 0; a < rows.dims; ++a)
      idx[a] = csv::parse_index(cols[a], line_no);
    std::vector<double> vals;
    for (std::size_t v = 0; v < rows.n_values; ++v)
      vals.push_back(csv::parse_double(cols[rows.dims + v], line_no));
    rows.indices.push_back(idx);
    rows.values.push_back(std::move(vals));
  }
  return rows;
}

/// Shape implied by the largest index on each axis; every cell must appear once.
inline Grid grid_for_rows(const ParsedRows& rows, const std::vector<double>& spacing,
                          const std::vector<double>& origin)
{
  std::vector<std::size_t> shape(rows.dims, 0);
  for (const auto& idx : rows.indices)
    for (std::size_t a = 0; a < rows.dims; ++a)
      shape[a] = std::max(shape[a], idx[a] + 1);
  for (std::size_t a = 0; a < rows.dims; ++a)
    if (shape[a] < 2)
      throw CsvError(rows.indices.size() + 1,
                     "field file needs at least 2 cells along axis " + std::to_string(a));
  Grid g(shape, spacing, origin);
  if (rows.indices.size() != g.size())
    throw CsvError(rows.indices.size() + 1,
                   "field file has " + std::to_string(rows.indices.size()) +
                       " rows for " + std::to_string(g.size()) + " cells");
  return g;
}

}  // namespace detail

inline void write_csv(std::ostream& out, const ScalarField& f)
{
  const Grid& g = f.grid();
  detail::write_header(out, g.dims(), false);
  for (std::size_t i = 0; i < f.size(); ++i) {
    detail::write_indices(out, g, i);
    out << csv::format_double(f[i]) << '\n';
  }
}

inline void write_csv(std::ostream& out, const Field<complex>& f)
{
  const Grid& g = f.grid();
  detail::write_header(out, g.dims(), true);
  for (std::size_t i = 0; i < f.size(); ++i) {
    detail::write_indices(out, g, i);
    out << csv::format_double(f[i].real()) << ','
        << csv::format_double(f[i].imag()) << '\n';
  }
}

/// Reads a real field. Grid geometry is not part of the file, so the caller
/// supplies spacing (one entry, or one per axis) and optionally origin.
inline ScalarField read_scalar_csv(std::istream& in, const std::vector<double>& spacing,
                                   const std::vector<double>& origin = {})
{
  const auto rows = detail::parse_field_rows(in);
  if (rows.n_values != 1)
    throw CsvError(1, "expected a single value_re column");
  Grid g = detail::grid_for_rows(rows, spacing, origin);
  std::vector<double> vals(g.size());
  std::vector<bool> seen(g.size(), false);
  for (std::size_t r = 0; r < rows.indices.size(); ++r) {
    const std::size_t f = g.flat(rows.indices[r]);
    if (seen[f])
      throw CsvError(r + 2, "duplicate cell");
    seen[f] = true;
    vals[f] = rows.values[r][0];
  }
  return {std::move(g), std::move(vals)};
}

/// Reads a complex field; a file with only `value_re` gives zero imaginary parts.
inline ComplexField read_complex_csv(std::istream& in, const std::vector<double>& spacing,
                                     const std::vector<double>& origin = {},
                                     double time_stamp = 0.0)
{
  const auto rows = detail::parse_field_rows(in);
  if (rows.n_values > 2)
    throw CsvError(1, "too many value columns");
  Grid g = detail::grid_for_rows(rows, spacing, origin);
  std::vector<complex> vals(g.size());
  std::vector<bool> seen(g.size(), false);
  for (std::size_t r = 0; r < rows.indices.size(); ++r) {
    const std::size_t f = g.flat(rows.indices[r]);
    if (seen[f])
      throw CsvError(r + 2, "duplicate cell");
    seen[f] = true;
    vals[f] = {rows.values[r][0], rows.n_values == 2 ? rows.values[r][1] : 0.0};
  }
  return {std::move(g), std::move(vals), time_stamp};
}

}  // namespace modschr
