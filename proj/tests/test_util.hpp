#pragma once

#include <initializer_list>
#include <utility>

#include "scar/image.hpp"
#include "scar/rng.hpp"

namespace scar::test {

inline BinaryMask mask_of(int w, int h, std::initializer_list<std::pair<int, int>> pixels) {
    BinaryMask m(w, h);
    for (const auto& [x, y] : pixels) m.set(x, y);
    return m;
}

inline BinaryMask full_mask(int w, int h) {
    BinaryMask m(w, h);
    std::fill(m.bits.begin(), m.bits.end(), 1);
    return m;
}

inline BinaryMask rect_mask(int w, int h, int x0, int y0, int rw, int rh) {
    BinaryMask m(w, h);
    for (int y = y0; y < y0 + rh; ++y)
        for (int x = x0; x < x0 + rw; ++x) m.set(x, y);
    return m;
}

inline bool subset_of(const BinaryMask& a, const BinaryMask& b) {
    for (std::size_t i = 0; i < a.bits.size(); ++i)
        if (a.bits[i] && !b.bits[i]) return false;
    return true;
}

}  // namespace scar::test
