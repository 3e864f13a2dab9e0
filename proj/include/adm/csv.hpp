#pragma once

#include "adm/control_loop.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace adm {

/// Column order of iterations.csv. One row per IterationRecord.
inline const std::vector<std::string> kIterationColumns = {
    "k",           "epsilon_norm",       "rms_global",        "rms_central",
    "pv_produced", "bvls_iterations",    "bvls_converged",    "bvls_objective",
    "bvls_kkt_residual", "bvls_active_lower", "bvls_active_upper"};

std::string iterations_csv(const std::vector<IterationRecord>& records);
/// Header "k,u_0,...,u_{m-1}", one row of applied voltages per iteration.
std::string voltages_csv(const std::vector<IterationRecord>& records);

/// Parsed CSV with a header row; all cells kept as text.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of `name` in the header; throws IoError when absent.
    std::size_t column(const std::string& name) const;
    std::vector<double> numbers(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable load_csv(const std::filesystem::path& path);

}  // namespace adm
