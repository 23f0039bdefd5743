#include "cignn/threading.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

namespace cignn {

void apply_thread_cap_from_env() {
    const char* raw = std::getenv("CIGNN_THREADS");
    if (raw == nullptr || *raw == '\0') {
        return;
    }
    int cap = 0;
    try {
        cap = std::stoi(raw);
    } catch (...) {
        return;  // unparsable values are ignored
    }
    if (cap >= 1) {
        omp_set_num_threads(std::min(cap, omp_get_max_threads()));
    }
}

int thread_budget() { return omp_get_max_threads(); }

}  // namespace cignn
