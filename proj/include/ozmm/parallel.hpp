#pragma once

namespace ozmm {

/// Number of threads parallel regions may use. Defaults to the OpenMP
/// maximum, capped by the OZMM_THREADS environment variable when set.
int thread_count();

/// Overrides the thread count for this process (0 restores the default).
void set_thread_count(int n);

}  // namespace ozmm
