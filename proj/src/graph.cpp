#include "cignn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iostream>
#include <string>

#include "cignn/csv.hpp"
#include "cignn/errors.hpp"
#include "cignn/kernels.hpp"
#include "cignn/rng.hpp"

namespace cignn {

namespace {

void require_square(const Tensor& m, const char* what) {
    if (m.rank() != 2 || m.dim(0) != m.dim(1)) {
        throw DimensionError(std::string(what) + ": expected a square matrix, got " +
                             m.shape_string());
    }
}

bool is_constant(const std::vector<double>& series) {
    for (double v : series) {
        if (v != series.front()) {
            return false;
        }
    }
    return true;
}

Tensor identity_matrix(std::size_t n) {
    Tensor out({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        out.at2(i, i) = 1.0;
    }
    return out;
}

}  // namespace

AdjacencyMatrix make_adjacency(Tensor values, AdjacencyMatrix::Kind kind) {
    require_square(values, "adjacency");
    const std::size_t n = values.dim(0);
    for (std::size_t i = 0; i < n; ++i) {
        if (values.at2(i, i) != 0.0) {
            throw InputError("adjacency: nonzero diagonal at node " + std::to_string(i));
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double v = values.at2(i, j);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw InputError("adjacency: entry (" + std::to_string(i) + "," + std::to_string(j) +
                                 ") = " + std::to_string(v) + " outside [0,1]");
            }
            if (v != values.at2(j, i)) {
                throw InputError("adjacency: asymmetric at (" + std::to_string(i) + "," +
                                 std::to_string(j) + ")");
            }
        }
    }
    return AdjacencyMatrix{kind, std::move(values)};
}

Tensor pairwise_distances(const Tensor& coordinates) {
    if (coordinates.rank() != 2) {
        throw DimensionError("pairwise_distances: expected (nodes, dims), got " +
                             coordinates.shape_string());
    }
    const std::size_t n = coordinates.dim(0);
    const std::size_t d = coordinates.dim(1);
    Tensor out({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double sq = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double delta = coordinates.at2(i, k) - coordinates.at2(j, k);
                sq += delta * delta;
            }
            const double dist = std::sqrt(sq);
            out.at2(i, j) = dist;
            out.at2(j, i) = dist;
        }
    }
    return out;
}

double default_kernel_width(const Tensor& distances) {
    require_square(distances, "default_kernel_width");
    const std::size_t n = distances.dim(0);
    if (n < 2) {
        throw InputError("default_kernel_width: need at least two nodes");
    }
    double mean = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) {
                mean += distances.at2(i, j);
                ++count;
            }
        }
    }
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) {
                const double delta = distances.at2(i, j) - mean;
                var += delta * delta;
            }
        }
    }
    return std::sqrt(var / static_cast<double>(count));
}

AdjacencyMatrix gaussian_kernel_adjacency(const Tensor& distances, double sigma, double kappa) {
    require_square(distances, "gaussian_kernel_adjacency");
    if (!(sigma > 0.0)) {
        throw InputError("gaussian_kernel_adjacency: sigma must be positive, got " +
                         std::to_string(sigma));
    }
    if (!(kappa > 0.0)) {
        throw InputError("gaussian_kernel_adjacency: kappa must be positive, got " +
                         std::to_string(kappa));
    }
    const std::size_t n = distances.dim(0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = distances.at2(i, j);
            if (d < 0.0) {
                throw InputError("gaussian_kernel_adjacency: negative distance at (" +
                                 std::to_string(i) + "," + std::to_string(j) + ")");
            }
            if (d != distances.at2(j, i)) {
                throw InputError("gaussian_kernel_adjacency: asymmetric distances at (" +
                                 std::to_string(i) + "," + std::to_string(j) + ")");
            }
        }
    }
    Tensor values({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                continue;
            }
            const double d = distances.at2(i, j);
            values.at2(i, j) = d <= kappa ? std::exp(-(d * d) / (sigma * sigma)) : 0.0;
        }
    }
    return make_adjacency(std::move(values), AdjacencyMatrix::Kind::kSpatial);
}

double dcca_coefficient(const std::vector<double>& x, const std::vector<double>& y,
                        std::size_t window) {
    const std::size_t total = x.size();
    if (y.size() != total) {
        throw DimensionError("dcca_coefficient: series lengths differ, " + std::to_string(total) +
                             " vs " + std::to_string(y.size()));
    }
    if (window < 2 || window > total) {
        throw InputError("dcca_coefficient: window " + std::to_string(window) +
                         " outside [2, " + std::to_string(total) + "]");
    }
    if (is_constant(x) || is_constant(y)) {
        throw DataError("dcca_coefficient: constant series has no in-window variance");
    }

    // Sums of per-window covariance and variances. Both the per-window
    // 1/(window-1) and the aggregate 1/(T-window) normalizations are common
    // to numerator and denominator, so the coefficient is their ratio.
    double cov_sum = 0.0;
    double var_x_sum = 0.0;
    double var_y_sum = 0.0;
    for (std::size_t s = 0; s + window <= total; ++s) {
        double mean_x = 0.0;
        double mean_y = 0.0;
        for (std::size_t t = s; t < s + window; ++t) {
            mean_x += x[t];
            mean_y += y[t];
        }
        mean_x /= static_cast<double>(window);
        mean_y /= static_cast<double>(window);
        for (std::size_t t = s; t < s + window; ++t) {
            const double dx = x[t] - mean_x;
            const double dy = y[t] - mean_y;
            cov_sum += dx * dy;
            var_x_sum += dx * dx;
            var_y_sum += dy * dy;
        }
    }
    if (!(var_x_sum > 0.0) || !(var_y_sum > 0.0)) {
        throw DataError("dcca_coefficient: series has no in-window variance");
    }
    // Cauchy-Schwarz bounds the true ratio by 1; clamp away the last-ulp
    // excursions rounding can introduce.
    const double ratio = cov_sum / (std::sqrt(var_x_sum) * std::sqrt(var_y_sum));
    return std::clamp(ratio, -1.0, 1.0);
}

AdjacencyMatrix relational_matrix(const std::vector<std::vector<double>>& series,
                                  std::size_t window) {
    const std::size_t n = series.size();
    if (n == 0) {
        throw InputError("relational_matrix: no series");
    }
    const std::size_t total = series.front().size();
    for (std::size_t i = 1; i < n; ++i) {
        if (series[i].size() != total) {
            throw DimensionError("relational_matrix: series " + std::to_string(i) + " has length " +
                                 std::to_string(series[i].size()) + ", series 0 has " +
                                 std::to_string(total));
        }
    }
    if (window < 2 || window > total) {
        throw InputError("relational_matrix: window " + std::to_string(window) + " outside [2, " +
                         std::to_string(total) + "]");
    }

    // Screen degenerate series up front so the parallel pair loop is
    // exception-free; every pair touching one correlates 0.
    std::vector<char> degenerate(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (is_constant(series[i])) {
            degenerate[i] = 1;
            std::cerr << "warning: relational_matrix: series " << i
                      << " is constant; correlations involving it are set to 0\n";
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            pairs.emplace_back(i, j);
        }
    }

    std::vector<double> rho(pairs.size(), 0.0);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(pairs.size()); ++p) {
        const auto [i, j] = pairs[static_cast<std::size_t>(p)];
        if (!degenerate[i] && !degenerate[j]) {
            rho[static_cast<std::size_t>(p)] = dcca_coefficient(series[i], series[j], window);
        }
    }

    Tensor values({n, n});
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p];
        const double clipped = rho[p] > 0.0 ? rho[p] : 0.0;
        values.at2(i, j) = clipped;
        values.at2(j, i) = clipped;
    }
    return make_adjacency(std::move(values), AdjacencyMatrix::Kind::kRelational);
}

Tensor normalized_laplacian(const AdjacencyMatrix& adjacency) {
    const Tensor& a = adjacency.values;
    const std::size_t n = a.dim(0);
    std::vector<double> inv_sqrt_degree(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double degree = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            degree += a.at2(i, j);
        }
        inv_sqrt_degree[i] = degree > 0.0 ? 1.0 / std::sqrt(degree) : 0.0;
    }
    Tensor out({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        if (inv_sqrt_degree[i] > 0.0) {
            out.at2(i, i) = 1.0;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) {
                out.at2(i, j) = -a.at2(i, j) * inv_sqrt_degree[i] * inv_sqrt_degree[j];
            }
        }
    }
    return out;
}

std::vector<Tensor> chebyshev_basis(const Tensor& scaled, std::size_t count) {
    require_square(scaled, "chebyshev_basis");
    if (count < 1) {
        throw InputError("chebyshev_basis: need at least one polynomial");
    }
    std::vector<Tensor> basis;
    basis.reserve(count);
    basis.push_back(identity_matrix(scaled.dim(0)));
    if (count > 1) {
        basis.push_back(scaled);
    }
    for (std::size_t k = 2; k < count; ++k) {
        Tensor next = kernels::matmul(scaled, basis[k - 1]);
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i] = 2.0 * next[i] - basis[k - 2][i];
        }
        basis.push_back(std::move(next));
    }
    return basis;
}

LaplacianBundle build_laplacian_bundle(const AdjacencyMatrix& adjacency, std::size_t count) {
    LaplacianBundle bundle;
    bundle.laplacian = normalized_laplacian(adjacency);
    bundle.scaled = bundle.laplacian;
    const std::size_t n = bundle.scaled.dim(0);
    for (std::size_t i = 0; i < n; ++i) {
        bundle.scaled.at2(i, i) -= 1.0;
    }
    bundle.cheb_basis = chebyshev_basis(bundle.scaled, count);
    return bundle;
}

SpectrumBounds estimate_spectrum_bounds(const Tensor& sym, std::uint64_t seed, int iterations) {
    require_square(sym, "estimate_spectrum_bounds");
    const std::size_t n = sym.dim(0);
    Rng rng(seed);

    const auto dominant = [&](const Tensor& m) {
        Tensor v({n, 1});
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = rng.uniform(-1.0, 1.0);
        }
        for (int it = 0; it < iterations; ++it) {
            Tensor w = kernels::matmul(m, v);
            double norm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                norm += w[i] * w[i];
            }
            norm = std::sqrt(norm);
            if (norm == 0.0) {
                return 0.0;  // matrix annihilated the probe; dominant value is 0
            }
            for (std::size_t i = 0; i < n; ++i) {
                w[i] /= norm;
            }
            v = std::move(w);
        }
        const Tensor w = kernels::matmul(m, v);
        double quotient = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            quotient += v[i] * w[i];
        }
        return quotient;  // Rayleigh quotient of the converged probe
    };

    SpectrumBounds bounds;
    bounds.lambda_max = dominant(sym);
    // shift so the smallest eigenvalue becomes the dominant one
    Tensor shifted({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            shifted.at2(i, j) = (i == j ? bounds.lambda_max : 0.0) - sym.at2(i, j);
        }
    }
    bounds.lambda_min = bounds.lambda_max - dominant(shifted);
    return bounds;
}

void write_matrix_csv(const Tensor& matrix, const std::filesystem::path& path) {
    require_square(matrix, "write_matrix_csv");
    std::ofstream out(path);
    if (!out) {
        throw InputError("write_matrix_csv: cannot open " + path.string() + " for writing");
    }
    const std::size_t n = matrix.dim(0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out << (j == 0 ? "" : ",") << csv::format_double(matrix.at2(i, j));
        }
        out << '\n';
    }
    if (!out.good()) {
        throw InputError("write_matrix_csv: write to " + path.string() + " failed");
    }
}

Tensor read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            break;
        }
        const std::vector<std::string> cells = csv::split_line(line);
        std::vector<double> parsed;
        parsed.reserve(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            parsed.push_back(csv::parse_double(cells[c], path, row, c + 1));
        }
        rows.push_back(std::move(parsed));
    }
    const std::size_t n = rows.size();
    if (n == 0) {
        throw ParseError(path.string() + ": empty matrix file");
    }
    Tensor out({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) {
            throw ParseError(path.string() + ": row " + std::to_string(i + 1) + " has " +
                             std::to_string(rows[i].size()) + " columns, expected " +
                             std::to_string(n));
        }
        for (std::size_t j = 0; j < n; ++j) {
            out.at2(i, j) = rows[i][j];
        }
    }
    return out;
}

AdjacencyMatrix read_adjacency_csv(const std::filesystem::path& path, AdjacencyMatrix::Kind kind) {
    return make_adjacency(read_matrix_csv(path), kind);
}

}  // namespace cignn
