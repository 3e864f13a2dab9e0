#include "adm/surface_io.hpp"

#include "adm/errors.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace adm {

namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
void put(std::string& out, T value)
{
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.append(bytes, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& offset)
{
    if (offset + sizeof(T) > in.size()) {
        throw IoError("unexpected end of binary data");
    }
    T value;
    std::memcpy(&value, in.data() + offset, sizeof(T));
    offset += sizeof(T);
    return value;
}

std::string read_all(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_text_matrix(std::ostream& os, const Eigen::Ref<const Eigen::MatrixXd>& m)
{
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c > 0) {
                os << ' ';
            }
            os << format_double(m(r, c));
        }
        os << '\n';
    }
}

Eigen::MatrixXd read_text_matrix(std::istream& is)
{
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::vector<double> row;
        std::string token;
        while (ls >> token) {
            double v = 0.0;
            const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
            if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
                throw IoError("text matrix: bad number '" + token + "' on line " +
                              std::to_string(rows.size() + 1));
            }
            row.push_back(v);
        }
        if (row.empty()) {
            continue;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw IoError("text matrix: ragged row " + std::to_string(rows.size() + 1));
        }
        rows.push_back(std::move(row));
    }
    const auto n_rows = static_cast<Eigen::Index>(rows.size());
    const auto n_cols = rows.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd m(n_rows, n_cols);
    for (Eigen::Index r = 0; r < n_rows; ++r) {
        for (Eigen::Index c = 0; c < n_cols; ++c) {
            m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
    }
    return m;
}

void save_text_matrix(const std::filesystem::path& path, const Eigen::Ref<const Eigen::MatrixXd>& m)
{
    std::ostringstream os;
    write_text_matrix(os, m);
    write_file_atomic(path, os.str());
}

Eigen::MatrixXd load_text_matrix(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    return read_text_matrix(is);
}

void save_surface_text(const std::filesystem::path& path, const SurfaceMap& surface)
{
    save_text_matrix(path, surface.heights_um);
}

SurfaceMap load_surface_text(const std::filesystem::path& path, const ApertureGrid& grid)
{
    const Eigen::MatrixXd m = load_text_matrix(path);
    if (m.rows() != grid.height_px || m.cols() != grid.width_px) {
        throw IoError(path.string() + ": matrix is " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + ", grid expects " + std::to_string(grid.height_px) +
                      "x" + std::to_string(grid.width_px));
    }
    return SurfaceMap(grid, m);
}

void save_surface_binary(const std::filesystem::path& path, const SurfaceMap& surface)
{
    std::string out(kSurfaceMagic, sizeof(kSurfaceMagic));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(surface.grid.width_px));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(surface.grid.height_px));
    const auto count = static_cast<std::size_t>(surface.heights_um.size());
    out.append(reinterpret_cast<const char*>(surface.heights_um.data()), count * sizeof(double));
    write_file_atomic(path, out);
}

SurfaceMap load_surface_binary(const std::filesystem::path& path, const ApertureGrid& grid)
{
    const std::string in = read_all(path);
    if (in.size() < sizeof(kSurfaceMagic) || std::memcmp(in.data(), kSurfaceMagic, sizeof(kSurfaceMagic)) != 0) {
        throw IoError(path.string() + ": not a surface file (bad magic)");
    }
    std::size_t offset = sizeof(kSurfaceMagic);
    const auto width = get<std::uint32_t>(in, offset);
    const auto height = get<std::uint32_t>(in, offset);
    if (static_cast<int>(width) != grid.width_px || static_cast<int>(height) != grid.height_px) {
        throw IoError(path.string() + ": surface shape does not match grid");
    }
    const std::size_t count = std::size_t{width} * height;
    if (in.size() != offset + count * sizeof(double)) {
        throw IoError(path.string() + ": truncated or oversized surface payload");
    }
    SurfaceMap s(grid);
    std::memcpy(s.heights_um.data(), in.data() + offset, count * sizeof(double));
    return s;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) {
            throw IoError("cannot write " + tmp.string());
        }
        os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!os) {
            throw IoError("short write to " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
    }
}

}  // namespace adm
