#pragma once

// Flat binary layout (little-endian):
//   char[4]  magic "APFX"
//   uint32   version (1)
//   uint64   M, N, d
//   float64  values[M][N+1][d]
// The grid endpoints are not stored; readers supply the grid and N is checked.

#include <filesystem>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "apfx/pathspace.hpp"

namespace apfx {

inline constexpr std::uint32_t kEnsembleFormatVersion = 1;

void write_binary(std::ostream& out, const PathEnsemble& x);
void write_binary(const std::filesystem::path& file, const PathEnsemble& x);
PathEnsemble read_binary(std::istream& in, const TimeGrid& grid);
PathEnsemble read_binary(const std::filesystem::path& file, const TimeGrid& grid);

// Columns: scenario,node_index,time,value_0..value_{d-1}
void write_csv(std::ostream& out, const PathEnsemble& x);
void write_csv(const std::filesystem::path& file, const PathEnsemble& x);

// Round-trip-exact formatting of a double ("%.17g").
std::string format_double(double v);

}  // namespace apfx
