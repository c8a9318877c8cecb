#pragma once

#include <complex>
#include <string>
#include <vector>

#include "cca/model.hpp"
#include "cca/sampling.hpp"

namespace cca {

enum class SpectrumSource { scc, block_b, projection_h };

const char* spectrum_source_name(SpectrumSource s);

// Sorted (descending) eigenvalue list. For the scc source the values are the
// canonical correlations l_i themselves; the matrix eigenvalues are l_i^2.
struct EmpiricalSpectrum {
    std::vector<double> values;
    SpectrumSource source = SpectrumSource::scc;
    Dimensions dims;

    // Empirical CDF of the matrix eigenvalues at x (l_i^2 for scc).
    double cdf(double x) const;
    std::vector<double> matrix_eigenvalues() const;
};

enum class Normalization { per_p, per_p_plus_q, per_n };

struct GreenTrace {
    std::complex<double> z;
    std::complex<double> value;
    SpectrumSource source;
    Normalization normalization;
};

// Canonical correlations l_i: singular values of Qx' Qy where Qx, Qy are
// orthonormal bases of the row spaces of X and Y. Throws RankDeficient when
// either Gram matrix is numerically singular.
EmpiricalSpectrum canonical_correlations(const SamplePair& s);

// All p+q eigenvalues of the symmetric block correlation matrix
// [[I_p, A], [A', I_q]] with A = (XX')^{-1/2} X Y' (YY')^{-1/2}.
EmpiricalSpectrum block_matrix_eigenvalues(const SamplePair& s);

// All n eigenvalues of the projection sum X'(XX')^{-1}X + Y'(YY')^{-1}Y.
EmpiricalSpectrum projection_sum_eigenvalues(const SamplePair& s);

// Normalized resolvent trace sum(1/(lambda_i - z)) / N with the
// source-appropriate normalization.
GreenTrace green_trace(const EmpiricalSpectrum& spec, std::complex<double> z);
GreenTrace green_trace(const EmpiricalSpectrum& spec, std::complex<double> z, Normalization norm);

// The eigenvalue multiset predicted for B from the canonical correlations:
// {1 + l_i} with min(p,q) entries, 1 repeated |q - p| times, {1 - l_i}.
std::vector<double> predicted_block_eigenvalues(const EmpiricalSpectrum& scc);

// Max elementwise distance between two sorted eigenvalue lists.
double multiset_distance(std::vector<double> a, std::vector<double> b);

struct IdentityReport {
    double block_multiset_distance = 0.0;  // eig(B) vs {1 +- l_i, 1 x (q-p)}
    double trace_identity_residual = 0.0;  // relative, at the probe point z
    double projection_multiset_distance = 0.0;  // nonzero eig(H) vs eig(B)
    int projection_zero_count = 0;
    int expected_zero_count = 0;
    std::complex<double> z;

    bool pass(double tol = 1e-8) const;
};

// Runs all three exact-identity checks on one sample at probe point z.
IdentityReport verify_theorem21(const SamplePair& s, std::complex<double> z);

// CSV export: comment header with source/dims, then one value per line.
void write_spectrum_csv(const std::string& path, const EmpiricalSpectrum& spec);

}  // namespace cca
