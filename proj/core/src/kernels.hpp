#pragma once

#include <cstddef>

namespace arcast::detail {

// Implemented in tanh_kernel.cpp, which is compiled with -ffast-math so the
// glibc vector math routines are eligible. +-inf saturate to +-1 there.
void tanh_array(const double* x, double* y, std::size_t n);

}  // namespace arcast::detail
