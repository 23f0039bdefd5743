#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "cignn/errors.hpp"
#include "cignn/graph.hpp"
#include "cignn/rng.hpp"
#include "cignn/tensor.hpp"
#include "reference/reference.hpp"

using cignn::AdjacencyMatrix;
using cignn::DataError;
using cignn::DimensionError;
using cignn::InputError;
using cignn::Rng;
using cignn::Tensor;

namespace {

// Value confirmed against an independent computation of the windowed
// covariance/fluctuation ratio; equals sqrt(3/7).
constexpr double kFrozenDcca = 0.6546536707079772;

Tensor random_symmetric(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    Tensor m({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = rng.uniform(lo, hi);
            m.at2(i, j) = v;
            m.at2(j, i) = v;
        }
    }
    return m;
}

AdjacencyMatrix random_adjacency(Rng& rng, std::size_t n) {
    Tensor values({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = rng.uniform();
            values.at2(i, j) = v;
            values.at2(j, i) = v;
        }
    }
    return cignn::make_adjacency(std::move(values), AdjacencyMatrix::Kind::kSpatial);
}

std::vector<double> random_walk(Rng& rng, std::size_t length) {
    std::vector<double> series(length);
    double level = rng.uniform(-1.0, 1.0);
    for (std::size_t t = 0; t < length; ++t) {
        level += 0.5 * rng.normal();
        series[t] = level;
    }
    return series;
}

}  // namespace

TEST_SUITE("graph_construction") {

TEST_CASE("adjacency: validation rejects malformed matrices") {
    CHECK_NOTHROW(cignn::make_adjacency(Tensor({2, 2}, {0, 0.5, 0.5, 0}),
                                        AdjacencyMatrix::Kind::kSpatial));
    // nonzero diagonal
    CHECK_THROWS_AS(cignn::make_adjacency(Tensor({2, 2}, {1, 0.5, 0.5, 0}),
                                          AdjacencyMatrix::Kind::kSpatial),
                    InputError);
    // asymmetric
    CHECK_THROWS_AS(cignn::make_adjacency(Tensor({2, 2}, {0, 0.5, 0.4, 0}),
                                          AdjacencyMatrix::Kind::kSpatial),
                    InputError);
    // out of range
    CHECK_THROWS_AS(cignn::make_adjacency(Tensor({2, 2}, {0, 1.5, 1.5, 0}),
                                          AdjacencyMatrix::Kind::kSpatial),
                    InputError);
    // not square
    CHECK_THROWS_AS(cignn::make_adjacency(Tensor({2, 3}), AdjacencyMatrix::Kind::kSpatial),
                    DimensionError);
}

TEST_CASE("gaussian kernel: distance sigma maps to exp(-1), truncation zeroes the rest") {
    // 3-node line: d(0,1) = d(1,2) = 1, d(0,2) = 2
    Tensor distances({3, 3}, {0, 1, 2, 1, 0, 1, 2, 1, 0});
    const AdjacencyMatrix a = cignn::gaussian_kernel_adjacency(distances, 1.0, 1.5);
    const double e1 = std::exp(-1.0);
    CHECK(a.values.at2(0, 1) == doctest::Approx(e1).epsilon(1e-15));
    CHECK(a.values.at2(1, 2) == doctest::Approx(e1).epsilon(1e-15));
    CHECK(a.values.at2(0, 2) == 0.0);  // beyond kappa
    CHECK(a.values.at2(0, 0) == 0.0);
    CHECK(a.kind == AdjacencyMatrix::Kind::kSpatial);
}

TEST_CASE("gaussian kernel: invalid inputs are rejected") {
    Tensor ok({2, 2}, {0, 1, 1, 0});
    CHECK_THROWS_AS(cignn::gaussian_kernel_adjacency(ok, 0.0, 1.0), InputError);
    CHECK_THROWS_AS(cignn::gaussian_kernel_adjacency(ok, 1.0, -1.0), InputError);
    Tensor negative({2, 2}, {0, -1, -1, 0});
    CHECK_THROWS_AS(cignn::gaussian_kernel_adjacency(negative, 1.0, 1.0), InputError);
    Tensor asymmetric({2, 2}, {0, 1, 2, 0});
    CHECK_THROWS_AS(cignn::gaussian_kernel_adjacency(asymmetric, 1.0, 1.0), InputError);
}

TEST_CASE("pairwise distances and the default kernel width") {
    Tensor coords({3, 2}, {0, 0, 3, 4, 0, 8});
    const Tensor d = cignn::pairwise_distances(coords);
    CHECK(d.at2(0, 1) == doctest::Approx(5.0));
    CHECK(d.at2(1, 0) == doctest::Approx(5.0));
    CHECK(d.at2(0, 2) == doctest::Approx(8.0));
    CHECK(d.at2(1, 2) == doctest::Approx(std::sqrt(9.0 + 16.0)));
    CHECK(d.at2(2, 2) == 0.0);

    // off-diagonal values are {5, 8, 5}; population std of that multiset
    const double mean = (5.0 + 8.0 + 5.0) / 3.0;
    const double var = ((5 - mean) * (5 - mean) * 2 + (8 - mean) * (8 - mean)) / 3.0;
    CHECK(cignn::default_kernel_width(d) == doctest::Approx(std::sqrt(var)).epsilon(1e-12));

    CHECK_THROWS_AS(cignn::default_kernel_width(Tensor({1, 1})), InputError);
}

TEST_CASE("dcca: perfectly correlated and anti-correlated series hit the bounds") {
    std::vector<double> x{1, 2, 3, 4, 5, 3, 2, 4};
    std::vector<double> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        neg[i] = -x[i];
    }
    CHECK(cignn::dcca_coefficient(x, x, 3) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cignn::dcca_coefficient(x, neg, 3) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("dcca: frozen hand-checked value") {
    std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y{2, 1, 4, 3, 6};
    const double rho = cignn::dcca_coefficient(x, y, 3);
    CHECK(rho == doctest::Approx(kFrozenDcca).epsilon(1e-14));
    CHECK(rho == doctest::Approx(cignn::testref::dcca_reference(x, y, 3)).epsilon(1e-14));
}

TEST_CASE("dcca: agrees with the window-by-window transcription on random pairs") {
    Rng rng(1401);
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<double> x = random_walk(rng, 50);
        const std::vector<double> y = random_walk(rng, 50);
        const double fast = cignn::dcca_coefficient(x, y, 4);
        const double oracle = cignn::testref::dcca_reference(x, y, 4);
        CHECK(std::abs(fast - oracle) <= 1e-10);
        CHECK(fast >= -1.0 - 1e-12);
        CHECK(fast <= 1.0 + 1e-12);
    }
}

TEST_CASE("dcca: symmetric in its arguments and invariant to positive affine maps") {
    Rng rng(1402);
    const std::vector<double> x = random_walk(rng, 30);
    const std::vector<double> y = random_walk(rng, 30);
    CHECK(cignn::dcca_coefficient(x, y, 5) ==
          doctest::Approx(cignn::dcca_coefficient(y, x, 5)).epsilon(1e-14));

    std::vector<double> scaled(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        scaled[i] = 3.5 * x[i] + 11.0;
    }
    CHECK(cignn::dcca_coefficient(scaled, y, 5) ==
          doctest::Approx(cignn::dcca_coefficient(x, y, 5)).epsilon(1e-12));
}

TEST_CASE("dcca: degenerate and out-of-range inputs") {
    std::vector<double> x{1, 2, 3, 4};
    std::vector<double> flat{2, 2, 2, 2};
    CHECK_THROWS_AS(cignn::dcca_coefficient(x, flat, 3), DataError);
    CHECK_THROWS_AS(cignn::dcca_coefficient(flat, x, 3), DataError);
    CHECK_THROWS_AS(cignn::dcca_coefficient(x, x, 1), InputError);
    CHECK_THROWS_AS(cignn::dcca_coefficient(x, x, 5), InputError);
    CHECK_THROWS_AS(cignn::dcca_coefficient(x, std::vector<double>{1, 2, 3}, 2), DimensionError);

    // window == series length leaves a single window; the shared aggregate
    // normalization cancels and the value stays finite and bounded
    const double edge = cignn::dcca_coefficient(x, std::vector<double>{2, 1, 4, 3}, 4);
    CHECK(std::isfinite(edge));
    CHECK(std::abs(edge) <= 1.0 + 1e-12);
}

TEST_CASE("relational matrix: identical series couple at 1, opposite series clip to 0") {
    Rng rng(1403);
    const std::vector<double> base = random_walk(rng, 40);
    std::vector<double> flipped(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        flipped[i] = -base[i];
    }
    const AdjacencyMatrix a = cignn::relational_matrix({base, base, flipped}, 4);
    CHECK(a.kind == AdjacencyMatrix::Kind::kRelational);
    CHECK(a.values.at2(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.values.at2(0, 2) == 0.0);  // rho = -1 clipped
    CHECK(a.values.at2(1, 2) == 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a.values.at2(i, i) == 0.0);
    }
}

TEST_CASE("relational matrix: entries equal the pairwise oracle") {
    Rng rng(1404);
    std::vector<std::vector<double>> series;
    for (int i = 0; i < 5; ++i) {
        series.push_back(random_walk(rng, 60));
    }
    const AdjacencyMatrix a = cignn::relational_matrix(series, 4);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = i + 1; j < 5; ++j) {
            const double rho = cignn::testref::dcca_reference(series[i], series[j], 4);
            const double expected = rho > 0.0 ? rho : 0.0;
            CHECK(std::abs(a.values.at2(i, j) - expected) <= 1e-10);
            CHECK(a.values.at2(i, j) == a.values.at2(j, i));
        }
    }
}

TEST_CASE("relational matrix: a constant series couples to nothing instead of aborting") {
    Rng rng(1405);
    const std::vector<double> live = random_walk(rng, 30);
    const std::vector<double> dead(30, 7.0);
    const AdjacencyMatrix a = cignn::relational_matrix({live, dead, live}, 4);
    CHECK(a.values.at2(0, 1) == 0.0);
    CHECK(a.values.at2(1, 2) == 0.0);
    CHECK(a.values.at2(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalized laplacian: two connected nodes") {
    const AdjacencyMatrix a =
        cignn::make_adjacency(Tensor({2, 2}, {0, 1, 1, 0}), AdjacencyMatrix::Kind::kSpatial);
    const Tensor l = cignn::normalized_laplacian(a);
    CHECK(l.at2(0, 0) == doctest::Approx(1.0));
    CHECK(l.at2(0, 1) == doctest::Approx(-1.0));
    CHECK(l.at2(1, 0) == doctest::Approx(-1.0));
    CHECK(l.at2(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("normalized laplacian: isolated nodes zero out their row and column") {
    Tensor values({3, 3});
    values.at2(0, 1) = 0.8;
    values.at2(1, 0) = 0.8;
    const AdjacencyMatrix a = cignn::make_adjacency(values, AdjacencyMatrix::Kind::kSpatial);
    const Tensor l = cignn::normalized_laplacian(a);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(l.at2(2, k) == 0.0);
        CHECK(l.at2(k, 2) == 0.0);
    }
    CHECK(l.at2(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("normalized laplacian: eigenvalues stay in [0, 2]") {
    Rng rng(1406);
    for (int trial = 0; trial < 5; ++trial) {
        const AdjacencyMatrix a = random_adjacency(rng, 6);
        const std::vector<double> eigs =
            cignn::testref::jacobi_eigenvalues(cignn::normalized_laplacian(a));
        for (double e : eigs) {
            CHECK(e >= -1e-10);
            CHECK(e <= 2.0 + 1e-10);
        }
    }
}

TEST_CASE("chebyshev basis: first members and the order-1 identity case") {
    Rng rng(1407);
    const Tensor m = random_symmetric(rng, 4);
    const std::vector<Tensor> k1 = cignn::chebyshev_basis(m, 1);
    REQUIRE(k1.size() == 1);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(k1[0].at2(i, j) == (i == j ? 1.0 : 0.0));
        }
    }
    const std::vector<Tensor> k2 = cignn::chebyshev_basis(m, 2);
    REQUIRE(k2.size() == 2);
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(k2[1][i] == m[i]);
    }
    CHECK_THROWS_AS(cignn::chebyshev_basis(m, 0), InputError);
}

TEST_CASE("chebyshev basis: recurrence matches direct polynomial expansion up to order 5") {
    Rng rng(1408);
    for (int trial = 0; trial < 3; ++trial) {
        const Tensor m = random_symmetric(rng, 8, -0.5, 0.5);
        const std::vector<Tensor> recursive = cignn::chebyshev_basis(m, 6);
        const std::vector<Tensor> direct = cignn::testref::chebyshev_direct(m, 6);
        REQUIRE(recursive.size() == direct.size());
        for (std::size_t k = 0; k < 6; ++k) {
            for (std::size_t i = 0; i < m.size(); ++i) {
                CHECK(std::abs(recursive[k][i] - direct[k][i]) <= 1e-9);
            }
        }
    }
}

TEST_CASE("laplacian bundle: shift and basis are wired consistently") {
    Rng rng(1409);
    const AdjacencyMatrix a = random_adjacency(rng, 5);
    const cignn::LaplacianBundle bundle = cignn::build_laplacian_bundle(a, 3);
    REQUIRE(bundle.cheb_basis.size() == 3);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            const double expected = bundle.laplacian.at2(i, j) - (i == j ? 1.0 : 0.0);
            CHECK(bundle.scaled.at2(i, j) == doctest::Approx(expected).epsilon(1e-15));
            CHECK(bundle.cheb_basis[0].at2(i, j) == (i == j ? 1.0 : 0.0));
            CHECK(bundle.cheb_basis[1].at2(i, j) == bundle.scaled.at2(i, j));
        }
    }
    // the shifted spectrum must land in [-1, 1] for the recursion to be stable
    for (double e : cignn::testref::jacobi_eigenvalues(bundle.scaled)) {
        CHECK(e >= -1.0 - 1e-10);
        CHECK(e <= 1.0 + 1e-10);
    }
}

TEST_CASE("spectrum bounds: power iteration recovers well-separated extremes") {
    Tensor diag({5, 5});
    for (std::size_t i = 0; i < 5; ++i) {
        diag.at2(i, i) = static_cast<double>(i + 1);  // eigenvalues 1..5
    }
    const cignn::SpectrumBounds bounds = cignn::estimate_spectrum_bounds(diag);
    CHECK(bounds.lambda_max == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(bounds.lambda_min == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("adjacency csv: write/read round-trips exactly") {
    Rng rng(1410);
    const AdjacencyMatrix a = random_adjacency(rng, 7);
    const std::filesystem::path path =
        std::filesystem::temp_directory_path() / "cignn_adjacency_roundtrip.csv";
    cignn::write_matrix_csv(a.values, path);
    const AdjacencyMatrix back = cignn::read_adjacency_csv(path, AdjacencyMatrix::Kind::kSpatial);
    REQUIRE(back.values.same_shape(a.values));
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        CHECK(back.values[i] == a.values[i]);  // exact, not approximate
    }
    std::filesystem::remove(path);
}

TEST_CASE("adjacency csv: malformed files are reported with their location") {
    const std::filesystem::path path =
        std::filesystem::temp_directory_path() / "cignn_adjacency_bad.csv";
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        REQUIRE(f != nullptr);
        std::fputs("0,0.5\n0.5,oops\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_WITH_AS(cignn::read_matrix_csv(path), doctest::Contains("row 2"),
                         cignn::ParseError);
    std::filesystem::remove(path);
}

}  // TEST_SUITE
