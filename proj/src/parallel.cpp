#include "stixelpn/parallel.h"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stixelpn {

namespace {
ExecMode g_mode = ExecMode::openmp;
}

ExecMode default_exec_mode() { return g_mode; }
void set_exec_mode(ExecMode mode) { g_mode = mode; }

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

void init_threads_from_env() {
    const char* env = std::getenv("STIXELPN_THREADS");
    if (!env || !*env) return;
    try {
        set_threads(std::stoi(env));
    } catch (...) {
        // ignore malformed values, keep the OpenMP default
    }
}

}  // namespace stixelpn
