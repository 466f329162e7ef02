#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"
#include "tabmoe/errors.hpp"

namespace tabmoe::kernels {
namespace {

bool cpu_supports(Isa isa) {
    switch (isa) {
    case Isa::scalar:
        return true;
    case Isa::avx2:
#if defined(TABMOE_HAVE_AVX2)
        return __builtin_cpu_supports("avx2") != 0;
#else
        return false;
#endif
    case Isa::neon:
#if defined(TABMOE_HAVE_NEON)
        return true; // baseline on aarch64
#else
        return false;
#endif
    }
    return false;
}

const Kernels* table_for(Isa isa) {
    switch (isa) {
    case Isa::scalar:
        return &scalar::table();
#if defined(TABMOE_HAVE_AVX2)
    case Isa::avx2:
        return &avx2::table();
#endif
#if defined(TABMOE_HAVE_NEON)
    case Isa::neon:
        return &neon::table();
#endif
    default:
        return nullptr;
    }
}

std::atomic<const Kernels*> g_active{nullptr};

const Kernels* initial_selection() {
    Isa isa = best_available();
    if (const char* env = std::getenv("TABMOE_ISA")) {
        Isa forced;
        if (isa_from_name(env, forced) && cpu_supports(forced)) isa = forced;
    }
    return table_for(isa);
}

} // namespace

const Kernels& active() {
    const Kernels* k = g_active.load(std::memory_order_acquire);
    if (k == nullptr) {
        k = initial_selection();
        const Kernels* expected = nullptr;
        g_active.compare_exchange_strong(expected, k, std::memory_order_acq_rel);
        k = g_active.load(std::memory_order_acquire);
    }
    return *k;
}

bool select(Isa isa) {
    if (!cpu_supports(isa)) return false;
    const Kernels* k = table_for(isa);
    if (k == nullptr) return false;
    g_active.store(k, std::memory_order_release);
    return true;
}

Isa best_available() {
    if (cpu_supports(Isa::avx2)) return Isa::avx2;
    if (cpu_supports(Isa::neon)) return Isa::neon;
    return Isa::scalar;
}

std::vector<Isa> available() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
        if (cpu_supports(isa)) out.push_back(isa);
    }
    return out;
}

const Kernels& table(Isa isa) {
    if (!cpu_supports(isa)) {
        throw DomainError("kernel variant not available on this CPU: " +
                          std::string(isa_name(isa)));
    }
    const Kernels* k = table_for(isa);
    if (k == nullptr) {
        throw DomainError("kernel variant not compiled in: " + std::string(isa_name(isa)));
    }
    return *k;
}

std::string_view isa_name(Isa isa) {
    switch (isa) {
    case Isa::scalar:
        return "scalar";
    case Isa::avx2:
        return "avx2";
    case Isa::neon:
        return "neon";
    }
    return "unknown";
}

bool isa_from_name(std::string_view name, Isa& out) {
    if (name == "scalar") {
        out = Isa::scalar;
        return true;
    }
    if (name == "avx2") {
        out = Isa::avx2;
        return true;
    }
    if (name == "neon") {
        out = Isa::neon;
        return true;
    }
    return false;
}

} // namespace tabmoe::kernels
