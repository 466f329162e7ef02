#pragma once

#include "tabmoe/kernels.hpp"

// Per-ISA kernel tables, defined in their own translation units so each can
// be compiled with the matching -m flags.

namespace tabmoe::kernels {

namespace scalar {
const Kernels& table();
}

#if defined(TABMOE_HAVE_AVX2)
namespace avx2 {
const Kernels& table();
}
#endif

#if defined(TABMOE_HAVE_NEON)
namespace neon {
const Kernels& table();
}
#endif

} // namespace tabmoe::kernels
