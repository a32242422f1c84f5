#include <iostream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "ctxspot_cli/cli.hpp"

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Forward/backward allocate megabyte-sized temporaries per chunk; keep them
  // on the heap instead of an mmap/munmap pair each time.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
  return ctxspot::cli::dispatch(argc, argv, std::cout, std::cerr);
}
