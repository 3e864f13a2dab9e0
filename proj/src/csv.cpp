#include "adm/csv.hpp"

#include "adm/errors.hpp"
#include "adm/surface_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace adm {

namespace {

std::string join_row(const std::vector<std::string>& cells)
{
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) {
            line += ',';
        }
        line += cells[i];
    }
    return line + '\n';
}

}  // namespace

std::string iterations_csv(const std::vector<IterationRecord>& records)
{
    std::string out = join_row(kIterationColumns);
    for (const auto& r : records) {
        out += join_row({std::to_string(r.k), format_double(r.epsilon_norm), format_double(r.rms_global),
                         format_double(r.rms_central), format_double(r.pv_produced),
                         std::to_string(r.bvls.iterations), r.bvls.converged ? "1" : "0",
                         format_double(r.bvls.objective), format_double(r.bvls.kkt_residual),
                         std::to_string(r.bvls.active_lower), std::to_string(r.bvls.active_upper)});
    }
    return out;
}

std::string voltages_csv(const std::vector<IterationRecord>& records)
{
    std::vector<std::string> header = {"k"};
    const Eigen::Index m = records.empty() ? 0 : records.front().u.size();
    for (Eigen::Index i = 0; i < m; ++i) {
        header.push_back("u_" + std::to_string(i));
    }
    std::string out = join_row(header);
    for (const auto& r : records) {
        std::vector<std::string> row = {std::to_string(r.k)};
        for (Eigen::Index i = 0; i < r.u.size(); ++i) {
            row.push_back(format_double(r.u[i]));
        }
        out += join_row(row);
    }
    return out;
}

std::size_t CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw IoError("csv: no column named '" + name + "'");
}

std::vector<double> CsvTable::numbers(const std::string& name) const
{
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string& cell = rows[r][c];
        double v = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
            throw IoError("csv: row " + std::to_string(r + 1) + ", column '" + name + "': not a number");
        }
        out.push_back(v);
    }
    return out;
}

CsvTable parse_csv(const std::string& text)
{
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        if (line.back() == ',') {
            cells.emplace_back();
        }
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw IoError("csv: row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(cells.size()) +
                          " cells, header has " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) {
        throw IoError("csv: missing header row");
    }
    return t;
}

CsvTable load_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_csv(ss.str());
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

}  // namespace adm
