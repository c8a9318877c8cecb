#include "cca/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "cca/errors.hpp"
#include "cca/io_util.hpp"

namespace cca {

const char* spectrum_source_name(SpectrumSource s) {
    switch (s) {
        case SpectrumSource::scc:          return "scc";
        case SpectrumSource::block_b:      return "block_b";
        case SpectrumSource::projection_h: return "projection_h";
    }
    return "unknown";
}

double EmpiricalSpectrum::cdf(double x) const {
    const auto ev = matrix_eigenvalues();
    std::size_t count = 0;
    for (double v : ev) {
        if (v <= x) ++count;
    }
    return ev.empty() ? 0.0 : static_cast<double>(count) / static_cast<double>(ev.size());
}

std::vector<double> EmpiricalSpectrum::matrix_eigenvalues() const {
    std::vector<double> ev = values;
    if (source == SpectrumSource::scc) {
        for (double& v : ev) v = v * v;
    }
    return ev;
}

namespace {

// Orthonormal basis of the row space of M (columns of M'), with a rank check
// against the smallest-singular-value threshold n * eps * scale.
Eigen::MatrixXd row_space_basis(const Eigen::MatrixXd& m, const char* label) {
    const Eigen::Index rows = m.rows();  // p (or q)
    const Eigen::Index cols = m.cols();  // n
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m.transpose());
    qr.setThreshold(static_cast<double>(cols) * std::numeric_limits<double>::epsilon());
    if (qr.rank() < rows) {
        throw RankDeficient(std::string(label) + " has numerically rank-deficient Gram matrix (rank " +
                            std::to_string(qr.rank()) + " < " + std::to_string(rows) + ")");
    }
    return qr.householderQ() * Eigen::MatrixXd::Identity(cols, rows);
}

Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& s, const char* label) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    const double largest = es.eigenvalues().maxCoeff();
    const double floor = largest * static_cast<double>(s.rows()) * std::numeric_limits<double>::epsilon();
    if (es.eigenvalues().minCoeff() <= floor) {
        throw RankDeficient(std::string(label) + " is numerically singular");
    }
    return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
}

std::vector<double> sorted_descending(const Eigen::VectorXd& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

}  // namespace

EmpiricalSpectrum canonical_correlations(const SamplePair& s) {
    const Eigen::MatrixXd qx = row_space_basis(s.X, "XX'");
    const Eigen::MatrixXd qy = row_space_basis(s.Y, "YY'");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(qx.transpose() * qy);
    Eigen::VectorXd sv = svd.singularValues();
    // Products of orthonormal projections cannot exceed 1; trim rounding overshoot.
    for (Eigen::Index i = 0; i < sv.size(); ++i) sv[i] = std::clamp(sv[i], 0.0, 1.0);
    EmpiricalSpectrum spec;
    spec.values = sorted_descending(sv);
    spec.source = SpectrumSource::scc;
    spec.dims = {static_cast<int>(s.X.rows()), static_cast<int>(s.Y.rows()),
                 static_cast<int>(s.X.cols())};
    return spec;
}

EmpiricalSpectrum block_matrix_eigenvalues(const SamplePair& s) {
    const Eigen::Index p = s.X.rows();
    const Eigen::Index q = s.Y.rows();
    const Eigen::MatrixXd xxt_is = inverse_sqrt_spd(s.X * s.X.transpose(), "XX'");
    const Eigen::MatrixXd yyt_is = inverse_sqrt_spd(s.Y * s.Y.transpose(), "YY'");
    const Eigen::MatrixXd a = xxt_is * (s.X * s.Y.transpose()) * yyt_is;

    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(p + q, p + q);
    b.topRightCorner(p, q) = a;
    b.bottomLeftCorner(q, p) = a.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);

    EmpiricalSpectrum spec;
    spec.values = sorted_descending(es.eigenvalues());
    spec.source = SpectrumSource::block_b;
    spec.dims = {static_cast<int>(p), static_cast<int>(q), static_cast<int>(s.X.cols())};
    return spec;
}

EmpiricalSpectrum projection_sum_eigenvalues(const SamplePair& s) {
    const Eigen::MatrixXd qx = row_space_basis(s.X, "XX'");
    const Eigen::MatrixXd qy = row_space_basis(s.Y, "YY'");
    const Eigen::MatrixXd h = qx * qx.transpose() + qy * qy.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    EmpiricalSpectrum spec;
    spec.values = sorted_descending(es.eigenvalues());
    spec.source = SpectrumSource::projection_h;
    spec.dims = {static_cast<int>(s.X.rows()), static_cast<int>(s.Y.rows()),
                 static_cast<int>(s.X.cols())};
    return spec;
}

GreenTrace green_trace(const EmpiricalSpectrum& spec, std::complex<double> z) {
    Normalization norm = Normalization::per_p;
    switch (spec.source) {
        case SpectrumSource::scc:          norm = Normalization::per_p; break;
        case SpectrumSource::block_b:      norm = Normalization::per_p_plus_q; break;
        case SpectrumSource::projection_h: norm = Normalization::per_n; break;
    }
    return green_trace(spec, z, norm);
}

GreenTrace green_trace(const EmpiricalSpectrum& spec, std::complex<double> z, Normalization norm) {
    const auto ev = spec.matrix_eigenvalues();
    if (z.imag() == 0.0) {
        for (double v : ev) {
            if (std::abs(v - z.real()) < 1e-14) {
                throw PoleHit("z = " + format_double(z.real()) + " hits eigenvalue " + format_double(v));
            }
        }
    }
    std::complex<double> sum = 0.0;
    for (double v : ev) sum += 1.0 / (v - z);
    double denom = 1.0;
    switch (norm) {
        case Normalization::per_p:        denom = spec.dims.p; break;
        case Normalization::per_p_plus_q: denom = spec.dims.p + spec.dims.q; break;
        case Normalization::per_n:        denom = spec.dims.n; break;
    }
    return {z, sum / denom, spec.source, norm};
}

std::vector<double> predicted_block_eigenvalues(const EmpiricalSpectrum& scc) {
    const int p = scc.dims.p;
    const int q = scc.dims.q;
    const int mn = std::min(p, q);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(p + q));
    for (int i = 0; i < mn; ++i) out.push_back(1.0 + scc.values[static_cast<std::size_t>(i)]);
    for (int i = 0; i < std::max(p, q) - mn; ++i) out.push_back(1.0);
    for (int i = 0; i < mn; ++i) out.push_back(1.0 - scc.values[static_cast<std::size_t>(i)]);
    return out;
}

double multiset_distance(std::vector<double> a, std::vector<double> b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

bool IdentityReport::pass(double tol) const {
    return block_multiset_distance < tol && trace_identity_residual < tol &&
           projection_multiset_distance < tol && projection_zero_count == expected_zero_count;
}

IdentityReport verify_theorem21(const SamplePair& s, std::complex<double> z) {
    const auto scc = canonical_correlations(s);
    const auto block = block_matrix_eigenvalues(s);
    const auto proj = projection_sum_eigenvalues(s);
    const int p = scc.dims.p;
    const int q = scc.dims.q;
    const int n = scc.dims.n;

    IdentityReport report;
    report.z = z;
    report.block_multiset_distance = multiset_distance(block.values, predicted_block_eigenvalues(scc));

    // Tr G_b(z) = (z-1) [Tr G_xy((1-z)^2) + Tr G_yx((1-z)^2)], where G_yx has
    // the same nonzero spectrum as G_xy plus q-p zeros.
    const std::complex<double> w = (1.0 - z) * (1.0 - z);
    const std::complex<double> tr_gxy = green_trace(scc, w, Normalization::per_p).value * double(p);
    const std::complex<double> tr_gyx = tr_gxy + double(q - p) / (0.0 - w);
    const std::complex<double> tr_gb =
        green_trace(block, z, Normalization::per_p_plus_q).value * double(p + q);
    const std::complex<double> rhs = (z - 1.0) * (tr_gxy + tr_gyx);
    report.trace_identity_residual = std::abs(tr_gb - rhs) / std::abs(tr_gb);

    // Nonzero spectrum of H matches B's spectrum; the rest is an exact-zero
    // cluster of size n - p - q.
    const double zero_threshold = 1e-8 * std::abs(proj.values.front());
    std::vector<double> nonzero;
    for (double v : proj.values) {
        if (std::abs(v) > zero_threshold) nonzero.push_back(v);
    }
    report.projection_zero_count = n - static_cast<int>(nonzero.size());
    report.expected_zero_count = n - p - q;
    report.projection_multiset_distance =
        multiset_distance(std::move(nonzero), block.values);
    return report;
}

void write_spectrum_csv(const std::string& path, const EmpiricalSpectrum& spec) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "# source=" << spectrum_source_name(spec.source) << " p=" << spec.dims.p
        << " q=" << spec.dims.q << " n=" << spec.dims.n << "\n";
    out << "value\n";
    for (double v : spec.values) out << format_double(v) << "\n";
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace cca
