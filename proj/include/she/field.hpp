#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace she {

enum class FieldKind : std::uint8_t { spatial = 0, spacetime = 1, modelled = 2 };

// Periodic box [0,L)^d with N nodes per axis; spacetime fields add M time
// slices t_k = k*dt, k = 0..M-1, with dt = T/M.
struct Grid {
  int d = 1;
  double L = 1.0;
  std::size_t N = 64;
  double T = 0.0;
  std::size_t M = 0;

  double dx() const { return L / double(N); }
  double dt() const { return M ? T / double(M) : 0.0; }
  std::size_t space_size() const;
  double cell_volume(bool spacetime) const;
  bool parabolic_compatible() const;  // dt within a factor 4 of dx^2
  bool operator==(const Grid&) const = default;
};

struct Field {
  Grid grid;
  FieldKind kind = FieldKind::spatial;
  std::size_t channels = 1;
  std::vector<double> values;

  Field() = default;
  Field(const Grid& g, FieldKind k, std::size_t ch = 1);

  std::size_t slices() const { return kind == FieldKind::spatial ? 1 : grid.M; }
  std::size_t size() const { return values.size(); }
  double* slice(std::size_t k, std::size_t ch = 0) { return values.data() + (ch * slices() + k) * grid.space_size(); }
  const double* slice(std::size_t k, std::size_t ch = 0) const {
    return values.data() + (ch * slices() + k) * grid.space_size();
  }
  // Axis lengths, time first for spacetime fields.
  std::vector<std::size_t> shape() const;
  void check_finite() const;
};

void write_field(const std::string& path, const Field& f);
Field read_field(const std::string& path);

bool is_pow2(std::size_t n);

}  // namespace she
