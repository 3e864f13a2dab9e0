#pragma once

#include "adm/estimator.hpp"

#include <filesystem>

namespace adm {

// Estimator checkpoint layout, all little-endian:
//   bytes 0..7  magic "ADMRLS01"
//   uint32      form (0 dense, 1 factored)
//   uint32      reserved, 0
//   int64       n, m, update count
//   float64     beta, delta
//   float64[n*m]  x_hat = vec(L_hat), column-stacked
//   float64[n]    last model error
//   float64[d*d]  S (d = n*m) or P (d = m), column-major
inline constexpr char kEstimatorMagic[8] = {'A', 'D', 'M', 'R', 'L', 'S', '0', '1'};

void save_estimator(const std::filesystem::path& path, const EstimatorState& state);
EstimatorState load_estimator(const std::filesystem::path& path);

/// Writes U.txt, B.txt, Z.txt (text-matrix convention) and theta.txt into `dir`.
void save_probes(const std::filesystem::path& dir, const ProbeDataset& probes);
ProbeDataset load_probes(const std::filesystem::path& dir);

}  // namespace adm
