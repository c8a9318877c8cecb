#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cca/model.hpp"
#include "cca/rng.hpp"

namespace cca {

// One simulated replicate: X = Lambda * Y + Gamma * W with W, Y i.i.d. from
// the configured family and Gamma * Gamma' = I - Lambda * Lambda'.
struct SamplePair {
    Eigen::MatrixXd X;  // p x n
    Eigen::MatrixXd Y;  // q x n
    std::int64_t replicate_id = 0;
    std::uint64_t config_hash = 0;
};

// Single standardized draw from the family (mean 0, variance 1). gamma42 is
// Gamma(shape 4, scale 2) standardized as (x - 8) / 4.
double draw_standardized(Dist dist, Xoshiro256pp& rng);

// Diagonal Gamma factor for the diagonal embedding: gamma_i = sqrt(1 - lambda_i^2).
Eigen::VectorXd build_gamma(std::span<const double> lambda_values);

// Precomputes the Lambda / Gamma factors for a config (including the seeded
// orthogonal rotations when rotate is set) so replicates only pay for entry
// generation. draw() is pure: identical (config, replicate_id) pairs give
// bit-identical matrices, and distinct replicates use disjoint substreams.
class Sampler {
  public:
    explicit Sampler(const ModelConfig& config);

    SamplePair draw(std::int64_t replicate_id) const;
    const ModelConfig& config() const { return config_; }

    // Rotated factors (identity-rotation when rotate is off). Exposed for the
    // population identity check Lambda*Lambda' + Gamma*Gamma' = I_p.
    const Eigen::MatrixXd& lambda_matrix() const { return lambda_; }
    const Eigen::MatrixXd& gamma_matrix() const { return gamma_; }

  private:
    ModelConfig config_;
    Eigen::MatrixXd lambda_;  // p x q
    Eigen::MatrixXd gamma_;   // p x p
    bool diagonal_ = true;
};

// One-shot convenience wrapper around Sampler.
SamplePair draw_sample(const ModelConfig& config, std::int64_t replicate_id);

// Row-major binary container: magic "CCAM", uint32 rows, uint32 cols, then
// rows*cols little-endian doubles.
void dump_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix(const std::string& path);

}  // namespace cca
