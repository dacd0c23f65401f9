#pragma once

// Seeded RNG wrapper. Bounded draws avoid std::uniform_int_distribution on
// purpose: its output is implementation-defined, and generation jobs promise
// byte-identical reruns across toolchains for a fixed seed.

#include <cstdint>
#include <random>
#include <vector>

namespace sealkit {

class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform draw from [0, bound). Modulo bias is negligible for the small
    // bounds used here and keeps the stream portable.
    size_t uniform(size_t bound) {
        if (bound == 0) return 0;
        return static_cast<size_t>(next_u64() % bound);
    }

    int uniform_int(int lo, int hi) {  // inclusive range
        if (hi <= lo) return lo;
        return lo + static_cast<int>(uniform(static_cast<size_t>(hi - lo + 1)));
    }

    // Sample n distinct indices from [0, count) via partial Fisher-Yates;
    // result order is the selection order.
    std::vector<size_t> sample_indices(size_t count, size_t n) {
        std::vector<size_t> idx(count);
        for (size_t i = 0; i < count; ++i) idx[i] = i;
        if (n > count) n = count;
        for (size_t i = 0; i < n; ++i) {
            size_t j = i + uniform(count - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(n);
        return idx;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace sealkit
