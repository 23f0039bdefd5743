#pragma once

namespace cignn {

/// Applies the CIGNN_THREADS environment variable, if set, as a cap on the
/// OpenMP thread count. Call once at program start.
void apply_thread_cap_from_env();

/// Current OpenMP thread budget.
int thread_budget();

}  // namespace cignn
