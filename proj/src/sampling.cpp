#include "cca/sampling.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>

#include "cca/errors.hpp"

namespace cca {

double draw_standardized(Dist dist, Xoshiro256pp& rng) {
    switch (dist) {
        case Dist::gaussian: {
            // Box-Muller, one value per call so the stream layout stays fixed.
            const double u1 = rng.next_unit();
            const double u2 = rng.next_unit();
            return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        }
        case Dist::gamma42: {
            // Gamma(shape 4, scale 2) as a sum of four Exp(2), then (x-8)/4.
            double x = 0.0;
            for (int k = 0; k < 4; ++k) x += -2.0 * std::log(rng.next_unit());
            return (x - 8.0) * 0.25;
        }
        case Dist::rademacher:
            return (rng.next() & 1u) ? 1.0 : -1.0;
        case Dist::uniform:
            // Uniform on (-sqrt(3), sqrt(3)).
            return std::numbers::sqrt3 * (2.0 * rng.next_unit() - 1.0);
    }
    throw InvalidConfig("unsupported distribution");
}

namespace {

Eigen::MatrixXd draw_matrix(Dist dist, int rows, int cols, std::uint64_t key) {
    Xoshiro256pp rng(key);
    Eigen::MatrixXd m(rows, cols);
    // Column-by-column fill order is part of the determinism contract.
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) m(i, j) = draw_standardized(dist, rng);
    }
    return m;
}

// Seeded orthogonal matrix: QR of a Gaussian square matrix with the sign fix
// that makes the factorization unique (diag(R) > 0).
Eigen::MatrixXd seeded_orthogonal(int dim, std::uint64_t key) {
    Eigen::MatrixXd g = draw_matrix(Dist::gaussian, dim, dim, key);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < dim; ++i) {
        if (r(i, i) < 0.0) q.col(i) = -q.col(i);
    }
    return q;
}

}  // namespace

Eigen::VectorXd build_gamma(std::span<const double> lambda_values) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(lambda_values.size()));
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double v = lambda_values[static_cast<std::size_t>(i)];
        if (!(v >= 0.0) || v >= 1.0) {
            throw AtomOutOfRange("lambda value " + std::to_string(v) + " outside [0,1)");
        }
        g[i] = std::sqrt(1.0 - v * v);
    }
    return g;
}

Sampler::Sampler(const ModelConfig& config) : config_(config) {
    require_valid(config);
    const int p = config.dims.p;
    const int q = config.dims.q;
    if (!config.rotate) {
        // Diagonal embedding: keep the factors implicit, draw() works row-wise.
        diagonal_ = true;
        lambda_ = Eigen::MatrixXd::Zero(p, q);
        for (int i = 0; i < p; ++i) lambda_(i, i) = config.lambda[static_cast<std::size_t>(i)];
        gamma_ = build_gamma(config.lambda).asDiagonal();
        return;
    }
    diagonal_ = false;
    const Eigen::MatrixXd u = seeded_orthogonal(p, substream_key(config.seed, 0, stream_tag::rotate_left));
    const Eigen::MatrixXd v = seeded_orthogonal(q, substream_key(config.seed, 0, stream_tag::rotate_right));
    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(p, q);
    for (int i = 0; i < p; ++i) diag(i, i) = config.lambda[static_cast<std::size_t>(i)];
    lambda_ = u * diag * v.transpose();

    // Gamma = (I - Lambda Lambda')^{1/2} by symmetric eigendecomposition,
    // clamping eigenvalues that round to just below zero.
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(p, p) - lambda_ * lambda_.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    Eigen::VectorXd ev = es.eigenvalues();
    for (int i = 0; i < p; ++i) {
        if (ev[i] < 0.0) {
            if (ev[i] < -1e-12) throw InvalidConfig("I - Lambda Lambda' is not PSD");
            ev[i] = 0.0;
        }
    }
    gamma_ = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

SamplePair Sampler::draw(std::int64_t replicate_id) const {
    const int p = config_.dims.p;
    const int q = config_.dims.q;
    const int n = config_.dims.n;
    SamplePair s;
    s.replicate_id = replicate_id;
    s.config_hash = config_.hash();
    s.Y = draw_matrix(config_.dist, q, n, substream_key(config_.seed, replicate_id, stream_tag::matrix_y));
    const Eigen::MatrixXd w =
        draw_matrix(config_.dist, p, n, substream_key(config_.seed, replicate_id, stream_tag::matrix_w));
    if (diagonal_) {
        s.X.resize(p, n);
        for (int i = 0; i < p; ++i) {
            const double li = config_.lambda[static_cast<std::size_t>(i)];
            const double gi = std::sqrt(1.0 - li * li);
            s.X.row(i) = li * s.Y.row(i) + gi * w.row(i);
        }
    } else {
        s.X = lambda_ * s.Y + gamma_ * w;
    }
    return s;
}

SamplePair draw_sample(const ModelConfig& config, std::int64_t replicate_id) {
    return Sampler(config).draw(replicate_id);
}

void dump_matrix(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const char magic[4] = {'C', 'C', 'A', 'M'};
    const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&cols), 4);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            out.write(reinterpret_cast<const char*>(&v), 8);
        }
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

Eigen::MatrixXd load_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[4];
    std::uint32_t rows = 0, cols = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&rows), 4);
    in.read(reinterpret_cast<char*>(&cols), 4);
    if (!in || std::memcmp(magic, "CCAM", 4) != 0) throw IoError("bad matrix header in '" + path + "'");
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
        for (std::uint32_t j = 0; j < cols; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), 8);
            m(i, j) = v;
        }
    }
    if (!in) throw IoError("truncated matrix file '" + path + "'");
    return m;
}

}  // namespace cca
