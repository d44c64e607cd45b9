#include "monsoon/parallel.hpp"

#include <cstdlib>
#include <string>

namespace monsoon {

int worker_count() {
#ifdef _OPENMP
    int n = omp_get_max_threads();
#else
    int n = 1;
#endif
    if (const char* env = std::getenv("MONSOON_BENCH_THREADS")) {
        try {
            int cap = std::stoi(env);
            if (cap >= 1 && cap < n) n = cap;
        } catch (...) {
            // unparseable value: ignore, keep default
        }
    }
    return n;
}

void apply_thread_env() {
#ifdef _OPENMP
    omp_set_num_threads(worker_count());
#endif
}

} // namespace monsoon
