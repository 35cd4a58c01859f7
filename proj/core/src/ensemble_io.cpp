#include "apfx/ensemble_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>

#include "apfx/error.hpp"

namespace apfx {
namespace {

static_assert(std::endian::native == std::endian::little,
              "ensemble files are little-endian; add byte swapping for this target");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) fail(Errc::io, "truncated ensemble file");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_binary(std::ostream& out, const PathEnsemble& x) {
  out.write("APFX", 4);
  put<std::uint32_t>(out, kEnsembleFormatVersion);
  put<std::uint64_t>(out, x.scenarios());
  put<std::uint64_t>(out, x.grid().steps());
  put<std::uint64_t>(out, x.dim());
  const auto values = x.values();
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) fail(Errc::io, "failed writing ensemble");
}

void write_binary(const std::filesystem::path& file, const PathEnsemble& x) {
  std::ofstream out(file, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open " + file.string());
  write_binary(out, x);
}

PathEnsemble read_binary(std::istream& in, const TimeGrid& grid) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "APFX", 4) != 0) {
    fail(Errc::io, "not an APFX ensemble file");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kEnsembleFormatVersion) {
    fail(Errc::io, "unsupported ensemble format version " + std::to_string(version));
  }
  const auto m = get<std::uint64_t>(in);
  const auto n = get<std::uint64_t>(in);
  const auto d = get<std::uint64_t>(in);
  if (n != grid.steps()) {
    fail(Errc::shape_mismatch, "ensemble file has N=" + std::to_string(n) + ", grid has N=" +
                                   std::to_string(grid.steps()));
  }
  std::vector<double> values(m * (n + 1) * d);
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(values.size() * sizeof(double)))) {
    fail(Errc::io, "truncated ensemble payload");
  }
  return PathEnsemble(grid, m, d, std::move(values));
}

PathEnsemble read_binary(const std::filesystem::path& file, const TimeGrid& grid) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + file.string());
  return read_binary(in, grid);
}

void write_csv(std::ostream& out, const PathEnsemble& x) {
  out << "scenario,node_index,time";
  for (std::size_t i = 0; i < x.dim(); ++i) out << ",value_" << i;
  out << '\n';
  for (std::size_t m = 0; m < x.scenarios(); ++m) {
    for (std::size_t k = 0; k < x.node_count(); ++k) {
      out << m << ',' << k << ',' << format_double(x.grid().node(k));
      for (std::size_t i = 0; i < x.dim(); ++i) out << ',' << format_double(x.at(m, k, i));
      out << '\n';
    }
  }
}

void write_csv(const std::filesystem::path& file, const PathEnsemble& x) {
  std::ofstream out(file, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open " + file.string());
  write_csv(out, x);
}

}  // namespace apfx
