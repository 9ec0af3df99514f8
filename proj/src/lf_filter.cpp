#include "lakelabel/lf_filter.hpp"

#include <algorithm>
#include <map>

namespace lakelabel {

namespace {

// Sorted instance-index sets, one per LF column.
std::vector<std::vector<std::uint32_t>> vote_sets(const LabelMatrix& matrix) {
    std::vector<std::vector<std::uint32_t>> sets(matrix.m);
    for (const auto& v : matrix.votes) sets[v.lf].push_back(v.instance);
    for (auto& s : sets) std::sort(s.begin(), s.end());
    return sets;
}

void check_alignment(const std::vector<LabelingFunction>& lfs, const LabelMatrix& seed_matrix,
                     const std::vector<int>& gold) {
    if (lfs.size() != seed_matrix.m)
        throw Error("LF list and seed matrix disagree on LF count");
    if (gold.size() != seed_matrix.n)
        throw Error("gold labels misaligned: expected " + std::to_string(seed_matrix.n) +
                    " entries, got " + std::to_string(gold.size()));
}

} // namespace

double jaccard(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<LabelingFunction> accuracy_filter(const std::vector<LabelingFunction>& lfs,
                                              const LabelMatrix& seed_matrix,
                                              const std::vector<int>& gold,
                                              const FilterConfig& cfg) {
    check_alignment(lfs, seed_matrix, gold);
    auto stats = lf_stats(seed_matrix, gold);
    std::vector<LabelingFunction> retained;
    for (std::size_t j = 0; j < lfs.size(); ++j) {
        if (stats[j].votes < cfg.min_coverage_votes) continue;
        if (!stats[j].empirical_accuracy || *stats[j].empirical_accuracy < cfg.min_accuracy) continue;
        retained.push_back(lfs[j]);
    }
    return retained;
}

std::vector<LabelingFunction> redundancy_filter(const std::vector<LabelingFunction>& lfs,
                                                const LabelMatrix& seed_matrix,
                                                const std::vector<int>& gold,
                                                const FilterConfig& cfg) {
    check_alignment(lfs, seed_matrix, gold);
    auto stats = lf_stats(seed_matrix, gold);
    auto sets = vote_sets(seed_matrix);

    // Candidate order within each target group: accuracy desc, id asc.
    std::map<int, std::vector<std::size_t>> by_target;
    for (std::size_t j = 0; j < lfs.size(); ++j) by_target[lfs[j].target_label].push_back(j);

    std::vector<char> keep(lfs.size(), 0);
    for (auto& [target, members] : by_target) {
        std::vector<std::size_t> order = members;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            double aa = stats[a].empirical_accuracy.value_or(0.0);
            double ab = stats[b].empirical_accuracy.value_or(0.0);
            if (aa != ab) return aa > ab;
            return lfs[a].id < lfs[b].id;
        });
        std::vector<std::size_t> kept;
        for (std::size_t j : order) {
            bool redundant = false;
            for (std::size_t k : kept) {
                if (jaccard(sets[j], sets[k]) >= cfg.redundancy_jaccard) {
                    redundant = true;
                    break;
                }
            }
            if (!redundant) {
                kept.push_back(j);
                keep[j] = 1;
            }
        }
    }

    std::vector<LabelingFunction> retained;
    for (std::size_t j = 0; j < lfs.size(); ++j)
        if (keep[j]) retained.push_back(lfs[j]);
    return retained;
}

} // namespace lakelabel
