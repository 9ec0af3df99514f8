#pragma once

#include "lakelabel/lf.hpp"

#include <vector>

namespace lakelabel {

struct FilterConfig {
    double min_accuracy = 0.5;
    std::size_t min_coverage_votes = 1;
    double redundancy_jaccard = 0.9;
};

// Keeps LFs that vote on at least min_coverage_votes seed instances with
// empirical accuracy >= min_accuracy. Input order preserved.
std::vector<LabelingFunction> accuracy_filter(const std::vector<LabelingFunction>& lfs,
                                              const LabelMatrix& seed_matrix,
                                              const std::vector<int>& gold,
                                              const FilterConfig& cfg);

// Same-target duplicate pruning: pairwise Jaccard over voting instance
// sets; greedily keeps the most accurate LF (ties: lexicographically
// earlier id) and drops near-duplicates. Input order preserved.
std::vector<LabelingFunction> redundancy_filter(const std::vector<LabelingFunction>& lfs,
                                                const LabelMatrix& seed_matrix,
                                                const std::vector<int>& gold,
                                                const FilterConfig& cfg);

double jaccard(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b);

} // namespace lakelabel
