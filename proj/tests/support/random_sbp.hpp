#ifndef ILR_TESTS_RANDOM_SBP_HPP
#define ILR_TESTS_RANDOM_SBP_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "ilrapprox/composition.hpp"
#include "ilrapprox/sampling.hpp"

namespace ilr_test {

inline std::size_t uniform_index(ilrapprox::RandomStream& rng, std::size_t n) {
    return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
}

/// A random valid sign matrix: groups are split at random, in random order, starting from all parts.
inline std::vector<std::vector<int>> random_sbp_rows(std::size_t parts, ilrapprox::RandomStream& rng) {
    std::vector<std::vector<int>> psi(parts, std::vector<int>(parts - 1, 0));
    std::vector<std::vector<std::size_t>> open;
    std::vector<std::size_t> all(parts);
    for (std::size_t j = 0; j < parts; ++j) {
        all[j] = j;
    }
    open.push_back(all);
    for (std::size_t k = 0; k + 1 < parts; ++k) {
        const std::size_t pick = uniform_index(rng, open.size());
        auto group = open[pick];
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
        for (std::size_t i = group.size() - 1; i > 0; --i) {
            std::swap(group[i], group[uniform_index(rng, i + 1)]);
        }
        const std::size_t cut = 1 + uniform_index(rng, group.size() - 1);
        std::vector<std::size_t> plus(group.begin(), group.begin() + static_cast<std::ptrdiff_t>(cut));
        std::vector<std::size_t> minus(group.begin() + static_cast<std::ptrdiff_t>(cut), group.end());
        for (auto j : plus) {
            psi[j][k] = 1;
        }
        for (auto j : minus) {
            psi[j][k] = -1;
        }
        if (plus.size() > 1) {
            open.push_back(plus);
        }
        if (minus.size() > 1) {
            open.push_back(minus);
        }
    }
    return psi;
}

/// A random composition with parts spread over a few orders of magnitude.
inline ilrapprox::Composition random_composition(std::size_t parts, ilrapprox::RandomStream& rng) {
    std::vector<double> x(parts);
    for (auto& v : x) {
        v = std::exp(2.0 * rng.normal());
    }
    return ilrapprox::Composition::closure(x);
}

}

#endif
