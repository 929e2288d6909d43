#include "gridfuse/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gridfuse/errors.hpp"

namespace gridfuse {

void GridSpec::validate() const {
  if (!(lat_north > lat_south)) throw ConfigError("grid: lat_north must exceed lat_south");
  if (!(lon_east > lon_west)) throw ConfigError("grid: lon_east must exceed lon_west");
  if (n_rows < 1 || n_cols < 1) throw ConfigError("grid: subdivision counts must be >= 1");
  if (!std::isfinite(lat_north) || !std::isfinite(lat_south) || !std::isfinite(lon_east) ||
      !std::isfinite(lon_west)) {
    throw ConfigError("grid: bounds must be finite");
  }
}

std::optional<CellIndex> cell_of(double lat, double lon, const GridSpec& spec) {
  // Region membership under the half-open convention: latitudes in
  // (lat_south, lat_north], longitudes in [lon_west, lon_east).
  if (!(lat <= spec.lat_north && lat > spec.lat_south)) return std::nullopt;
  if (!(lon >= spec.lon_west && lon < spec.lon_east)) return std::nullopt;

  const int row = static_cast<int>(std::floor((spec.lat_north - lat) / spec.cell_height()));
  const int col = static_cast<int>(std::floor((lon - spec.lon_west) / spec.cell_width()));
  // Points that passed the membership guard but land on an out-of-range band
  // index are rounding casualties on the outer boundary; clamp them in.
  return CellIndex{std::clamp(row, 0, spec.n_rows - 1), std::clamp(col, 0, spec.n_cols - 1)};
}

namespace {

double lattice_lat(int edge_row, const GridSpec& spec) {
  if (edge_row == spec.n_rows) return spec.lat_south;
  return spec.lat_north - edge_row * spec.cell_height();
}

double lattice_lon(int edge_col, const GridSpec& spec) {
  if (edge_col == spec.n_cols) return spec.lon_east;
  return spec.lon_west + edge_col * spec.cell_width();
}

}  // namespace

std::array<GridNode, 4> cell_corners(CellIndex cell, const GridSpec& spec) {
  if (cell.row < 0 || cell.row >= spec.n_rows || cell.col < 0 || cell.col >= spec.n_cols) {
    throw ContractViolation("cell_corners: cell (" + std::to_string(cell.row) + ", " +
                            std::to_string(cell.col) + ") outside " +
                            std::to_string(spec.n_rows) + "x" + std::to_string(spec.n_cols) +
                            " grid");
  }
  const double north = lattice_lat(cell.row, spec);
  const double south = lattice_lat(cell.row + 1, spec);
  const double west = lattice_lon(cell.col, spec);
  const double east = lattice_lon(cell.col + 1, spec);
  return {GridNode{north, west}, GridNode{north, east}, GridNode{south, west},
          GridNode{south, east}};
}

}  // namespace gridfuse
