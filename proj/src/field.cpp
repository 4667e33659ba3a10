#include "she/field.hpp"

#include "she/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace she {

std::size_t Grid::space_size() const {
  std::size_t s = 1;
  for (int i = 0; i < d; ++i) s *= N;
  return s;
}

double Grid::cell_volume(bool spacetime) const {
  const double v = std::pow(dx(), d);
  return spacetime ? v * dt() : v;
}

bool Grid::parabolic_compatible() const {
  if (!M) return false;
  const double r = dt() / (dx() * dx());
  return r >= 0.25 && r <= 4.0;
}

bool is_pow2(std::size_t n) { return n && std::has_single_bit(n); }

Field::Field(const Grid& g, FieldKind k, std::size_t ch) : grid(g), kind(k), channels(ch) {
  values.assign(ch * slices() * grid.space_size(), 0.0);
}

std::vector<std::size_t> Field::shape() const {
  std::vector<std::size_t> s;
  if (kind != FieldKind::spatial) s.push_back(grid.M);
  for (int i = 0; i < grid.d; ++i) s.push_back(grid.N);
  return s;
}

void Field::check_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) fail_numerical("non-finite value in field");
}

namespace {

template <class T>
void put(std::ofstream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) fail_io("truncated field header");
  return v;
}

}  // namespace

void write_field(const std::string& path, const Field& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail_io("cannot open " + path + " for writing");
  os.write("SHEF", 4);
  put<std::uint32_t>(os, 1);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(f.kind));
  put<std::uint8_t>(os, static_cast<std::uint8_t>(f.grid.d));
  put<std::uint64_t>(os, f.grid.N);
  put<std::uint64_t>(os, f.kind == FieldKind::spatial ? 0 : f.grid.M);
  put<double>(os, f.grid.L);
  put<double>(os, f.grid.T);
  os.write(reinterpret_cast<const char*>(f.values.data()), std::streamsize(f.values.size() * sizeof(double)));
  if (!os) fail_io("write failed for " + path);
}

Field read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail_io("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SHEF", 4) != 0) fail_io(path + ": not a field file");
  if (get<std::uint32_t>(is) != 1) fail_io(path + ": unsupported field version");
  Field f;
  f.kind = static_cast<FieldKind>(get<std::uint8_t>(is));
  f.grid.d = get<std::uint8_t>(is);
  f.grid.N = get<std::uint64_t>(is);
  f.grid.M = get<std::uint64_t>(is);
  f.grid.L = get<double>(is);
  f.grid.T = get<double>(is);
  if (f.grid.d < 1 || f.grid.d > 3 || f.grid.N == 0) fail_io(path + ": bad grid in header");
  const std::size_t start = std::size_t(is.tellg());
  is.seekg(0, std::ios::end);
  const std::size_t bytes = std::size_t(is.tellg()) - start;
  is.seekg(std::streamoff(start));
  const std::size_t per = f.slices() * f.grid.space_size();
  if (bytes % (per * sizeof(double)) != 0 || bytes == 0) fail_io(path + ": payload size does not match header");
  f.channels = bytes / (per * sizeof(double));
  f.values.resize(f.channels * per);
  is.read(reinterpret_cast<char*>(f.values.data()), std::streamsize(bytes));
  if (!is) fail_io(path + ": truncated payload");
  return f;
}

}  // namespace she
