#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cignn/tensor.hpp"

namespace cignn {

/// Symmetric coupling matrix over one graph's nodes, entries in [0,1] with a
/// zero diagonal. Spatial matrices come from a truncated Gaussian kernel on
/// pairwise distances; relational matrices from clipped detrended
/// cross-correlation coefficients.
struct AdjacencyMatrix {
    enum class Kind { kSpatial, kRelational };

    Kind kind = Kind::kSpatial;
    Tensor values;  // (n, n)

    std::size_t node_count() const { return values.dim(0); }
};

/// Validates square shape, symmetry, entry range, and zero diagonal.
AdjacencyMatrix make_adjacency(Tensor values, AdjacencyMatrix::Kind kind);

/// Normalized Laplacian, its shifted copy, and the Chebyshev polynomial
/// basis the graph convolution consumes.
struct LaplacianBundle {
    Tensor laplacian;                // (n, n), eigenvalues in [0, 2]
    Tensor scaled;                   // laplacian - I, eigenvalues in [-1, 1]
    std::vector<Tensor> cheb_basis;  // T_0..T_{K-1} evaluated at `scaled`
};

/// Euclidean distances between rows of an (n, d) coordinate matrix.
Tensor pairwise_distances(const Tensor& coordinates);

/// Default kernel width: standard deviation of the off-diagonal pairwise
/// distances. Needs at least two nodes.
double default_kernel_width(const Tensor& distances);

/// Truncated Gaussian kernel: A[i][j] = exp(-d(i,j)^2 / sigma^2) where
/// d(i,j) <= kappa, else 0; diagonal forced to zero.
AdjacencyMatrix gaussian_kernel_adjacency(const Tensor& distances, double sigma, double kappa);

/// Detrended cross-correlation coefficient of two equal-length series over
/// sliding windows of the given length. Each window subtracts its own mean;
/// the coefficient is the ratio of the summed window covariances to the
/// product of the summed window fluctuation roots (the shared normalization
/// constants cancel in the ratio, which also keeps window == length finite).
/// Result lies in [-1, 1].
double dcca_coefficient(const std::vector<double>& x, const std::vector<double>& y,
                        std::size_t window);

/// Pairwise DCCA matrix with negatives clipped to zero and a zero diagonal.
/// All-constant series correlate 0 against everything, with a warning, so
/// one dead sensor does not abort a whole dataset build. Pairs are computed
/// in parallel and merged in pair order.
AdjacencyMatrix relational_matrix(const std::vector<std::vector<double>>& series,
                                  std::size_t window);

/// L = D^(-1/2) (D - A) D^(-1/2); rows and columns of zero-degree nodes are
/// zero by convention.
Tensor normalized_laplacian(const AdjacencyMatrix& adjacency);

/// First-kind Chebyshev matrices by the recurrence T_0 = I, T_1 = M,
/// T_k = 2 M T_{k-1} - T_{k-2}, evaluated at the already-shifted matrix.
std::vector<Tensor> chebyshev_basis(const Tensor& scaled, std::size_t count);

/// Full derivation from an adjacency matrix: normalized Laplacian, the
/// lambda_max = 2 shift, and `count` Chebyshev basis matrices.
LaplacianBundle build_laplacian_bundle(const AdjacencyMatrix& adjacency, std::size_t count);

/// Approximate extreme eigenvalues of a symmetric positive-semidefinite
/// matrix by seeded power iteration — a cheap diagnostic, not an exact
/// eigensolver.
struct SpectrumBounds {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};
SpectrumBounds estimate_spectrum_bounds(const Tensor& sym, std::uint64_t seed = 1,
                                        int iterations = 300);

/// Headerless n-row CSV round-trip for square matrices; values survive the
/// round trip exactly.
void write_matrix_csv(const Tensor& matrix, const std::filesystem::path& path);
Tensor read_matrix_csv(const std::filesystem::path& path);
AdjacencyMatrix read_adjacency_csv(const std::filesystem::path& path, AdjacencyMatrix::Kind kind);

}  // namespace cignn
