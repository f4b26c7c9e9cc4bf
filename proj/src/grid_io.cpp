#include "hessvar/grid_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "hessvar/errors.hpp"

namespace hessvar {

static_assert(std::endian::native == std::endian::little,
              "binary grid I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'H', 'V', 'G', 'F'};

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw PreconditionError("malformed number in grid CSV: '" + std::string(s) + "'");
  return v;
}

int parse_int(std::string_view s) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw PreconditionError("malformed integer in grid CSV: '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

const char* axis_names[] = {"i", "j", "k"};

void write_header(std::ostream& os, const GridGeometry& g, const std::vector<std::string>& cols) {
  os << "dim,n_axes,h,boundary_width\n";
  os << g.dim << ',';
  for (int a = 0; a < g.dim; ++a) os << (a ? "x" : "") << g.extents[a];
  os << ',' << format_double(g.spacing) << ',' << g.boundary_width << '\n';
  for (int a = 0; a < g.dim; ++a) os << axis_names[a] << ',';
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
}

void write_index(std::ostream& os, const GridGeometry& g, std::size_t lin) {
  const Index idx = g.multi(lin);
  for (int a = 0; a < g.dim; ++a) os << idx[a] << ',';
}

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw PreconditionError("truncated binary grid file");
  return v;
}

void write_binary_header(std::ostream& os, const GridGeometry& g) {
  os.write(kMagic, 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim));
  for (int a = 0; a < g.dim; ++a) put<std::uint32_t>(os, static_cast<std::uint32_t>(g.extents[a]));
  put<double>(os, g.spacing);
}

}  // namespace

void write_csv(std::ostream& os, const ScalarGrid& grid) {
  const GridGeometry& g = grid.geometry();
  write_header(os, g, {"value"});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    write_index(os, g, i);
    os << format_double(grid.valid(i) ? grid[i] : std::numeric_limits<double>::quiet_NaN()) << '\n';
  }
}

void write_csv(std::ostream& os, const SymMatField& field) {
  const GridGeometry& g = field.geometry();
  std::vector<std::string> cols;
  for (int a = 0; a < field.components(); ++a) {
    const auto p = packed_pair(g.dim, a);
    cols.push_back("m" + std::to_string(p[0] + 1) + std::to_string(p[1] + 1));
  }
  write_header(os, g, cols);
  for (std::size_t i = 0; i < field.size(); ++i) {
    write_index(os, g, i);
    for (int a = 0; a < field.components(); ++a) {
      const double v =
          field.valid(i) ? field.plane(a)[i] : std::numeric_limits<double>::quiet_NaN();
      os << (a ? "," : "") << format_double(v);
    }
    os << '\n';
  }
}

GridFile read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "dim,n_axes,h,boundary_width")
    throw PreconditionError("grid CSV must start with 'dim,n_axes,h,boundary_width'");
  if (!std::getline(is, line)) throw PreconditionError("grid CSV missing metadata row");
  const auto meta = split(line, ',');
  if (meta.size() != 4) throw PreconditionError("grid CSV metadata row needs 4 fields");
  GridFile file;
  GridGeometry& g = file.geometry;
  g.dim = parse_int(meta[0]);
  if (g.dim < 1 || g.dim > kMaxDim) throw PreconditionError("grid CSV dimension out of range");
  const auto ext = split(meta[1], 'x');
  if (static_cast<int>(ext.size()) != g.dim) throw PreconditionError("grid CSV extents mismatch");
  g.extents = {1, 1, 1};
  for (int a = 0; a < g.dim; ++a) g.extents[a] = parse_int(ext[a]);
  g.spacing = parse_double(meta[2]);
  g.boundary_width = parse_int(meta[3]);

  if (!std::getline(is, line)) throw PreconditionError("grid CSV missing column header");
  const auto cols = split(line, ',');
  const int value_cols = static_cast<int>(cols.size()) - g.dim;
  if (value_cols == 1 && cols.back() == "value") {
    file.components = 1;
  } else if (value_cols == packed_size(g.dim)) {
    file.components = value_cols;
  } else {
    throw PreconditionError("grid CSV column header not recognised");
  }

  const std::size_t n = g.node_count();
  file.payload.assign(n * file.components, 0.0);
  std::vector<std::uint8_t> seen(n, 0);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (static_cast<int>(f.size()) != g.dim + file.components)
      throw PreconditionError("grid CSV row has the wrong number of fields");
    Index idx{0, 0, 0};
    for (int a = 0; a < g.dim; ++a) {
      idx[a] = parse_int(f[a]);
      if (idx[a] < 0 || idx[a] >= g.extents[a]) throw PreconditionError("grid CSV index out of range");
    }
    const std::size_t lin = g.linear(idx);
    if (seen[lin]) throw PreconditionError("grid CSV lists a node twice");
    for (int c = 0; c < file.components; ++c)
      file.payload[lin * file.components + c] = parse_double(f[g.dim + c]);
    seen[lin] = 1;
    ++rows;
  }
  if (rows != n) throw PreconditionError("grid CSV does not list every node exactly once");
  return file;
}

void write_binary(std::ostream& os, const ScalarGrid& grid) {
  write_binary_header(os, grid.geometry());
  for (std::size_t i = 0; i < grid.size(); ++i)
    put<double>(os, grid.valid(i) ? grid[i] : std::numeric_limits<double>::quiet_NaN());
}

void write_binary(std::ostream& os, const SymMatField& field) {
  write_binary_header(os, field.geometry());
  for (std::size_t i = 0; i < field.size(); ++i)
    for (int a = 0; a < field.components(); ++a)
      put<double>(os, field.valid(i) ? field.plane(a)[i] : std::numeric_limits<double>::quiet_NaN());
}

void write_binary_mask(std::ostream& os, const GridGeometry& g, std::span<const std::uint8_t> mask) {
  if (mask.size() != g.node_count()) throw PreconditionError("mask size mismatch");
  write_binary_header(os, g);
  os.write(reinterpret_cast<const char*>(mask.data()), static_cast<std::streamsize>(mask.size()));
}

GridFile read_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw PreconditionError("not an HVGF grid file");
  GridFile file;
  GridGeometry& g = file.geometry;
  g.dim = static_cast<int>(get<std::uint32_t>(is));
  if (g.dim < 1 || g.dim > kMaxDim) throw PreconditionError("HVGF dimension out of range");
  g.extents = {1, 1, 1};
  for (int a = 0; a < g.dim; ++a) g.extents[a] = static_cast<int>(get<std::uint32_t>(is));
  g.spacing = get<double>(is);
  g.boundary_width = 2;

  std::string rest((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const std::size_t n = g.node_count();
  if (rest.size() == n) {
    file.components = 0;
    file.mask.assign(rest.begin(), rest.end());
    return file;
  }
  if (rest.size() % (8 * n) != 0) throw PreconditionError("HVGF payload length does not match extents");
  file.components = static_cast<int>(rest.size() / (8 * n));
  file.payload.resize(n * file.components);
  std::memcpy(file.payload.data(), rest.data(), rest.size());
  return file;
}

GridFile load_grid_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open grid file " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  const bool binary = in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0;
  in.clear();
  in.seekg(0);
  return binary ? read_binary(in) : read_csv(in);
}

ScalarGrid to_scalar_grid(const GridFile& file) {
  if (file.components != 1) throw PreconditionError("grid file does not hold a scalar field");
  ScalarGrid grid(file.geometry);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = file.payload[i];
    grid.set_valid(i, !std::isnan(v));
    grid[i] = std::isnan(v) ? 0.0 : v;
  }
  return grid;
}

SymMatField to_field(const GridFile& file) {
  const int m = packed_size(file.geometry.dim);
  if (file.components != m) throw PreconditionError("grid file does not hold a matrix field");
  SymMatField field(file.geometry);
  for (std::size_t i = 0; i < field.size(); ++i) {
    bool ok = true;
    for (int a = 0; a < m; ++a) {
      const double v = file.payload[i * m + a];
      ok = ok && !std::isnan(v);
      field.plane(a)[i] = std::isnan(v) ? 0.0 : v;
    }
    field.set_valid(i, ok);
    if (!ok)
      for (int a = 0; a < m; ++a) field.plane(a)[i] = 0.0;
  }
  return field;
}

}  // namespace hessvar
