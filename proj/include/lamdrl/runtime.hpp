#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace lamdrl {

/// Training churns through many short-lived Eigen temporaries; glibc's default
/// trim and mmap thresholds turn that into a stream of syscalls.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace lamdrl
