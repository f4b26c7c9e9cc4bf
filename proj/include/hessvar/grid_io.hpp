#pragma once
// Grid and field serialization.
//
// CSV:    line 1  `dim,n_axes,h,boundary_width`
//         line 2  the values, with n_axes written as extents joined by 'x'
//                 (e.g. `2,33x33,0.0625,2`)
//         line 3  column header: `i,j[,k],value` or `i,j[,k],m11,m12,...`
//         then one node per row. Doubles use the shortest round-trip form;
//         nodes outside the valid mask are written as `nan`.
// Binary: "HVGF", u32 dim, u32 extents[dim], f64 h, then the node-major
//         payload (f64 per component, or one u8 per node for masks), all
//         little-endian. The payload kind is inferred from its byte length.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "hessvar/grid.hpp"

namespace hessvar {

struct GridFile {
  GridGeometry geometry;
  /// Values per node: 1 (scalar), n(n+1)/2 (matrix field); 0 for a u8 mask.
  int components = 1;
  std::vector<double> payload;      ///< node-major, components per node
  std::vector<std::uint8_t> mask;   ///< u8 payload when components == 0
};

void write_csv(std::ostream& os, const ScalarGrid& grid);
void write_csv(std::ostream& os, const SymMatField& field);
GridFile read_csv(std::istream& is);

void write_binary(std::ostream& os, const ScalarGrid& grid);
void write_binary(std::ostream& os, const SymMatField& field);
void write_binary_mask(std::ostream& os, const GridGeometry& g, std::span<const std::uint8_t> mask);
GridFile read_binary(std::istream& is);

/// Reads either format (binary when the file starts with the magic).
GridFile load_grid_file(const std::filesystem::path& path);

ScalarGrid to_scalar_grid(const GridFile& file);
SymMatField to_field(const GridFile& file);

}  // namespace hessvar
