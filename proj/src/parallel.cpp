#include "echopose/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace echopose {

void init_workers_from_env() {
  if (const char* env = std::getenv("ECHOPOSE_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
}

int worker_count() { return omp_get_max_threads(); }

}  // namespace echopose
