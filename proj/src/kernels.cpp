#include "cignn/kernels.hpp"

#include <cmath>
#include <cstddef>

#include "cignn/errors.hpp"

namespace cignn::kernels {

namespace {

// Below this many multiply-adds the OpenMP fork costs more than it saves.
constexpr std::size_t kParallelGrain = 1 << 15;

void require_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2) {
        throw DimensionError(std::string(op) + ": expected rank-2 tensor, got " + t.shape_string());
    }
}

}  // namespace

double sigmoid_scalar(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const std::size_t rows = trans_a ? a.dim(1) : a.dim(0);
    const std::size_t inner = trans_a ? a.dim(0) : a.dim(1);
    const std::size_t inner_b = trans_b ? b.dim(1) : b.dim(0);
    const std::size_t cols = trans_b ? b.dim(0) : b.dim(1);
    if (inner != inner_b) {
        throw DimensionError("matmul: inner dimensions disagree, " + a.shape_string() +
                             (trans_a ? "^T" : "") + " x " + b.shape_string() + (trans_b ? "^T" : ""));
    }

    Tensor out({rows, cols});
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    const std::size_t lda = a.dim(1);
    const std::size_t ldb = b.dim(1);

    const bool big = rows * cols * inner >= kParallelGrain;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < inner; ++k) {
                const double av = trans_a ? pa[k * lda + i] : pa[i * lda + k];
                const double bv = trans_b ? pb[j * ldb + k] : pb[k * ldb + j];
                acc += av * bv;
            }
            po[i * cols + j] = acc;
        }
    }
    return out;
}

void add(const Tensor& a, const Tensor& b, Tensor& out) {
    require_same_shape(a, b, "add");
    out = Tensor(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] + b[i];
    }
}

void sub(const Tensor& a, const Tensor& b, Tensor& out) {
    require_same_shape(a, b, "sub");
    out = Tensor(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] - b[i];
    }
}

void mul(const Tensor& a, const Tensor& b, Tensor& out) {
    require_same_shape(a, b, "mul");
    out = Tensor(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] * b[i];
    }
}

void scale(const Tensor& a, double s, Tensor& out) {
    out = Tensor(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] * s;
    }
}

void sigmoid(const Tensor& a, Tensor& out) {
    out = Tensor(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = sigmoid_scalar(a[i]);
    }
}

void tanh(const Tensor& a, Tensor& out) {
    out = Tensor(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = std::tanh(a[i]);
    }
}

double sum(const Tensor& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i];
    }
    return acc;
}

Tensor node_matrix_apply(const Tensor& m, const Tensor& x, bool transpose_m) {
    require_rank2(m, "node_matrix_apply");
    if (x.rank() != 3) {
        throw DimensionError("node_matrix_apply: signal must be (channels,nodes,features), got " +
                             x.shape_string());
    }
    const std::size_t n = x.dim(1);
    if (m.dim(0) != n || m.dim(1) != n) {
        throw DimensionError("node_matrix_apply: matrix " + m.shape_string() +
                             " does not act on node axis of " + x.shape_string());
    }
    const std::size_t channels = x.dim(0);
    const std::size_t features = x.dim(2);

    Tensor out({channels, n, features});
    const double* pm = m.data();
    const double* px = x.data();
    double* po = out.data();

    const bool big = channels * n * n * features >= kParallelGrain;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(channels); ++c) {
        const double* xc = px + static_cast<std::size_t>(c) * n * features;
        double* oc = po + static_cast<std::size_t>(c) * n * features;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = 0; p < features; ++p) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double mv = transpose_m ? pm[j * n + i] : pm[i * n + j];
                    acc += mv * xc[j * features + p];
                }
                oc[i * features + p] = acc;
            }
        }
    }
    return out;
}

}  // namespace cignn::kernels
