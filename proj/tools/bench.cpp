// Times the OpenMP-parallel kernels against their serial reference
// implementations and prints a small comparison table. The reference code is
// the same naive implementation the test suite uses as its oracle, so the
// benchmark doubles as a large-input agreement check.

#include <chrono>
#include <cstdio>
#include <functional>

#include "cignn/kernels.hpp"
#include "cignn/rng.hpp"
#include "cignn/tensor.hpp"
#include "cignn/threading.hpp"
#include "reference/reference.hpp"

namespace {

using cignn::Rng;
using cignn::Tensor;

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = rng.uniform(-1.0, 1.0);
    }
    return t;
}

double time_ms(const std::function<void()>& fn, int repeats) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i) {
        fn();
    }
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / repeats;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
        if (d > worst) {
            worst = d;
        }
    }
    return worst;
}

// Serial counterpart of kernels::node_matrix_apply, plain loops.
Tensor node_apply_reference(const Tensor& m, const Tensor& x) {
    const std::size_t channels = x.dim(0);
    const std::size_t n = x.dim(1);
    const std::size_t features = x.dim(2);
    Tensor out({channels, n, features});
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = 0; p < features; ++p) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    acc += m.at2(i, j) * x.at3(c, j, p);
                }
                out.at3(c, i, p) = acc;
            }
        }
    }
    return out;
}

}  // namespace

int main() {
    cignn::apply_thread_cap_from_env();
    std::printf("thread budget: %d\n\n", cignn::thread_budget());
    std::printf("%-28s %12s %12s %9s %12s\n", "kernel", "parallel ms", "serial ms", "speedup",
                "max |diff|");

    Rng rng(20240817);
    {
        const Tensor a = random_tensor(rng, {256, 256});
        const Tensor b = random_tensor(rng, {256, 256});
        Tensor fast, slow;
        const double t_fast = time_ms([&]() { fast = cignn::kernels::matmul(a, b); }, 5);
        const double t_slow = time_ms([&]() { slow = cignn::testref::naive_matmul(a, b); }, 5);
        std::printf("%-28s %12.3f %12.3f %8.2fx %12.3e\n", "matmul 256x256", t_fast, t_slow,
                    t_slow / t_fast, max_abs_diff(fast, slow));
    }
    {
        const Tensor a = random_tensor(rng, {64, 512});
        const Tensor b = random_tensor(rng, {512, 64});
        Tensor fast, slow;
        const double t_fast = time_ms([&]() { fast = cignn::kernels::matmul(a, b); }, 10);
        const double t_slow = time_ms([&]() { slow = cignn::testref::naive_matmul(a, b); }, 10);
        std::printf("%-28s %12.3f %12.3f %8.2fx %12.3e\n", "matmul 64x512 * 512x64", t_fast, t_slow,
                    t_slow / t_fast, max_abs_diff(fast, slow));
    }
    {
        const Tensor m = random_tensor(rng, {128, 128});
        const Tensor x = random_tensor(rng, {32, 128, 4});
        Tensor fast, slow;
        const double t_fast = time_ms([&]() { fast = cignn::kernels::node_matrix_apply(m, x); }, 10);
        const double t_slow = time_ms([&]() { slow = node_apply_reference(m, x); }, 10);
        std::printf("%-28s %12.3f %12.3f %8.2fx %12.3e\n", "node filter 32ch 128n 4f", t_fast, t_slow,
                    t_slow / t_fast, max_abs_diff(fast, slow));
    }
    std::printf("\nparallel and serial results must agree exactly; any nonzero diff is a bug\n");
    return 0;
}
