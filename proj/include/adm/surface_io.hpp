#pragma once

#include "adm/zernike.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>

namespace adm {

// Plain-text matrix: one row per line, whitespace-separated, values printed with
// shortest round-trip precision. Also the convention for probe-dataset files.
void write_text_matrix(std::ostream& os, const Eigen::Ref<const Eigen::MatrixXd>& m);
Eigen::MatrixXd read_text_matrix(std::istream& is);

void save_text_matrix(const std::filesystem::path& path, const Eigen::Ref<const Eigen::MatrixXd>& m);
Eigen::MatrixXd load_text_matrix(const std::filesystem::path& path);

void save_surface_text(const std::filesystem::path& path, const SurfaceMap& surface);
/// The text format carries no geometry; `grid` supplies it and must match the shape.
SurfaceMap load_surface_text(const std::filesystem::path& path, const ApertureGrid& grid);

// Binary surface layout, all little-endian:
//   bytes 0..7   magic "ADMSURF1"
//   bytes 8..11  uint32 width_px
//   bytes 12..15 uint32 height_px
//   then width_px * height_px float64 heights in micrometers, row-major.
inline constexpr char kSurfaceMagic[8] = {'A', 'D', 'M', 'S', 'U', 'R', 'F', '1'};

void save_surface_binary(const std::filesystem::path& path, const SurfaceMap& surface);
SurfaceMap load_surface_binary(const std::filesystem::path& path, const ApertureGrid& grid);

/// Formats a double with the shortest representation that parses back bit-exactly.
std::string format_double(double v);

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace adm
