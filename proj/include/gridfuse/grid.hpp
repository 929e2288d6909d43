#pragma once

#include <array>
#include <compare>
#include <optional>

namespace gridfuse {

/// Rectangular region of interest, uniformly subdivided into n_rows x n_cols
/// cells. Row 0 is the northernmost band, column 0 the westernmost.
struct GridSpec {
  double lat_north = 0.0;
  double lat_south = 0.0;
  double lon_east = 0.0;
  double lon_west = 0.0;
  int n_rows = 0;
  int n_cols = 0;

  double cell_height() const { return (lat_north - lat_south) / n_rows; }
  double cell_width() const { return (lon_east - lon_west) / n_cols; }

  /// Throws ConfigError unless bounds are ordered and subdivisions positive.
  void validate() const;
};

struct CellIndex {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

/// A point on the regular background-grid lattice.
struct GridNode {
  double lat = 0.0;
  double lon = 0.0;
};

/// Cell containing the point, or nullopt outside the region. Cells are
/// half-open: closed on their north and west edges, so a point on a shared
/// edge belongs to the cell to its south/east.
std::optional<CellIndex> cell_of(double lat, double lon, const GridSpec& spec);

/// The four lattice nodes bounding the cell, in NW, NE, SW, SE order.
/// Nodes on the region boundary coincide exactly with the stated bounds.
/// Throws ContractViolation for a cell outside the spec.
std::array<GridNode, 4> cell_corners(CellIndex cell, const GridSpec& spec);

}  // namespace gridfuse
