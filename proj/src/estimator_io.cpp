#include "adm/estimator_io.hpp"

#include "adm/errors.hpp"
#include "adm/surface_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace adm {

namespace {

template <typename T>
void put(std::string& out, T value)
{
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.append(bytes, sizeof(T));
}

void put_doubles(std::string& out, const double* data, std::size_t count)
{
    out.append(reinterpret_cast<const char*>(data), count * sizeof(double));
}

class Reader {
public:
    explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

    template <typename T>
    T get()
    {
        T value;
        take(&value, sizeof(T));
        return value;
    }

    void get_doubles(double* out, std::size_t count) { take(out, count * sizeof(double)); }

    bool exhausted() const { return offset_ == bytes_.size(); }

private:
    void take(void* out, std::size_t n)
    {
        if (offset_ + n > bytes_.size()) {
            throw IoError("estimator checkpoint is truncated");
        }
        std::memcpy(out, bytes_.data() + offset_, n);
        offset_ += n;
    }

    std::string bytes_;
    std::size_t offset_ = 0;
};

}  // namespace

void save_estimator(const std::filesystem::path& path, const EstimatorState& state)
{
    std::string out(kEstimatorMagic, sizeof(kEstimatorMagic));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(state.form()));
    put<std::uint32_t>(out, 0);
    put<std::int64_t>(out, state.n());
    put<std::int64_t>(out, state.m());
    put<std::int64_t>(out, state.updates());
    put<double>(out, state.beta());
    put<double>(out, state.delta());
    put_doubles(out, state.x_hat().data(), static_cast<std::size_t>(state.x_hat().size()));
    put_doubles(out, state.last_epsilon().data(), static_cast<std::size_t>(state.last_epsilon().size()));
    put_doubles(out, state.covariance().data(), static_cast<std::size_t>(state.covariance().size()));
    write_file_atomic(path, out);
}

EstimatorState load_estimator(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    Reader r(ss.str());

    char magic[8];
    for (char& c : magic) {
        c = r.get<char>();
    }
    if (std::memcmp(magic, kEstimatorMagic, sizeof(magic)) != 0) {
        throw IoError(path.string() + ": not an estimator checkpoint (bad magic)");
    }
    const auto form_raw = r.get<std::uint32_t>();
    if (form_raw > 1) {
        throw IoError(path.string() + ": unknown estimator form " + std::to_string(form_raw));
    }
    const auto form = static_cast<EstimatorForm>(form_raw);
    r.get<std::uint32_t>();
    const auto n = r.get<std::int64_t>();
    const auto m = r.get<std::int64_t>();
    const auto updates = r.get<std::int64_t>();
    if (n <= 0 || m <= 0 || n > (1 << 20) || m > (1 << 20)) {
        throw IoError(path.string() + ": implausible dimensions");
    }
    const double beta = r.get<double>();
    const double delta = r.get<double>();

    Eigen::MatrixXd L(n, m);
    r.get_doubles(L.data(), static_cast<std::size_t>(L.size()));
    Eigen::VectorXd eps(n);
    r.get_doubles(eps.data(), static_cast<std::size_t>(n));
    const std::int64_t d = (form == EstimatorForm::dense) ? n * m : m;
    Eigen::MatrixXd cov(d, d);
    r.get_doubles(cov.data(), static_cast<std::size_t>(cov.size()));
    if (!r.exhausted()) {
        throw IoError(path.string() + ": trailing bytes after estimator payload");
    }
    try {
        return EstimatorState::restore(form, beta, delta, std::move(L), std::move(cov), std::move(eps), updates);
    } catch (const DomainError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void save_probes(const std::filesystem::path& dir, const ProbeDataset& probes)
{
    std::filesystem::create_directories(dir);
    save_text_matrix(dir / "U.txt", probes.U);
    save_text_matrix(dir / "B.txt", probes.B);
    save_text_matrix(dir / "Z.txt", probes.Z);
    write_file_atomic(dir / "theta.txt", format_double(probes.theta_assumed) + "\n");
}

ProbeDataset load_probes(const std::filesystem::path& dir)
{
    ProbeDataset p;
    p.U = load_text_matrix(dir / "U.txt");
    p.B = load_text_matrix(dir / "B.txt");
    p.Z = load_text_matrix(dir / "Z.txt");
    const Eigen::MatrixXd theta = load_text_matrix(dir / "theta.txt");
    if (theta.size() != 1) {
        throw IoError((dir / "theta.txt").string() + ": expected a single value");
    }
    p.theta_assumed = theta(0, 0);
    if (p.U.rows() != p.B.rows() || p.U.cols() != p.B.cols() || p.Z.cols() != p.U.cols()) {
        throw IoError(dir.string() + ": probe matrices have inconsistent shapes");
    }
    return p;
}

}  // namespace adm
