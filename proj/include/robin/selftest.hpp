#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace robin {

struct SelftestCheck {
    std::string name;
    bool passed = false;
    double value = 0.0;     // observed error or violation count
    double tolerance = 0.0;
    std::string detail;
};

struct SelftestReport {
    std::vector<SelftestCheck> checks;
    bool passed() const;
};

/// Random (alpha, |grad alpha|, x_d) triples; every kernel inequality must hold up to
/// a few ulps of the right-hand side.
SelftestReport lemma22_suite(std::int64_t samples, std::uint64_t seed);

/// Sparse solver, shift-invert Arnoldi and the weighted norm against dense Eigen routines.
SelftestReport linalg_suite(std::uint64_t seed);

SelftestReport run_selftest(std::int64_t lemma22_samples, std::uint64_t seed);

} // namespace robin
