// Test-only brute-force oracles, kept independent of the library's
// implementation paths they check.
#pragma once

#include "lakelabel/eval.hpp"
#include "lakelabel/label_model.hpp"
#include "lakelabel/lf.hpp"
#include "lakelabel/lf_filter.hpp"
#include "lakelabel/rng.hpp"
#include "lakelabel/stacked.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

namespace oracle {

using namespace lakelabel;

// Dense per-cell reconstruction of a label matrix via apply_lf.
inline std::vector<std::vector<int>> dense_apply(const std::vector<LabelingFunction>& lfs,
                                                 const std::vector<ColumnInstance>& columns) {
    std::vector<std::vector<int>> dense(columns.size(), std::vector<int>(lfs.size(), kAbstain));
    for (std::size_t i = 0; i < columns.size(); ++i)
        for (std::size_t j = 0; j < lfs.size(); ++j) dense[i][j] = apply_lf(lfs[j], columns[i]);
    return dense;
}

struct LfStatsOracle {
    std::size_t votes = 0;
    double coverage = 0, overlap = 0, conflict = 0;
    std::optional<double> accuracy;
};

// Direct enumeration of coverage/overlap/conflict/accuracy.
inline std::vector<LfStatsOracle> stats_by_enumeration(const std::vector<std::vector<int>>& dense,
                                                       const std::vector<int>* gold) {
    std::size_t n = dense.size();
    std::size_t m = n == 0 ? 0 : dense[0].size();
    std::vector<LfStatsOracle> out(m);
    for (std::size_t j = 0; j < m; ++j) {
        std::size_t votes = 0, overlapped = 0, conflicted = 0, correct = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (dense[i][j] == kAbstain) continue;
            ++votes;
            bool other = false, diff = false;
            for (std::size_t j2 = 0; j2 < m; ++j2) {
                if (j2 == j || dense[i][j2] == kAbstain) continue;
                other = true;
                if (dense[i][j2] != dense[i][j]) diff = true;
            }
            if (other) ++overlapped;
            if (diff) ++conflicted;
            if (gold && (*gold)[i] == dense[i][j]) ++correct;
        }
        out[j].votes = votes;
        out[j].coverage = n == 0 ? 0.0 : double(votes) / double(n);
        out[j].overlap = votes == 0 ? 0.0 : double(overlapped) / double(votes);
        out[j].conflict = votes == 0 ? 0.0 : double(conflicted) / double(votes);
        if (gold && votes > 0) out[j].accuracy = double(correct) / double(votes);
    }
    return out;
}

// Closed-form Bayes posterior in plain probability space.
inline std::vector<double> bayes_posterior(const std::vector<double>& priors,
                                           const std::vector<double>& accuracies, int M,
                                           const std::vector<std::pair<int, int>>& votes) {
    std::vector<double> probs(priors);
    for (const auto& [j, v] : votes) {
        double a = accuracies[std::size_t(j)];
        for (int y = 0; y < M; ++y) probs[std::size_t(y)] *= (y == v) ? a : (1.0 - a) / double(M - 1);
    }
    double z = 0;
    for (double p : probs) z += p;
    for (double& p : probs) p /= z;
    return probs;
}

inline int counting_majority(const std::vector<int>& row_votes, int M) {
    std::vector<int> counts(std::size_t(M), 0);
    bool any = false;
    for (int v : row_votes)
        if (v != kAbstain) {
            counts[std::size_t(v)] += 1;
            any = true;
        }
    if (!any) return kAbstain;
    int best = 0;
    for (int y = 1; y < M; ++y)
        if (counts[std::size_t(y)] > counts[std::size_t(best)]) best = y;
    return best;
}

// Brute-force accuracy filter: recompute per-LF vote counts and accuracy
// directly from a dense matrix.
inline std::vector<std::size_t> accuracy_filter_oracle(const std::vector<std::vector<int>>& dense,
                                                       const std::vector<int>& gold,
                                                       const FilterConfig& cfg) {
    std::size_t m = dense.empty() ? 0 : dense[0].size();
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < m; ++j) {
        std::size_t votes = 0, correct = 0;
        for (std::size_t i = 0; i < dense.size(); ++i) {
            if (dense[i][j] == kAbstain) continue;
            ++votes;
            if (dense[i][j] == gold[i]) ++correct;
        }
        if (votes < cfg.min_coverage_votes) continue;
        if (votes == 0 || double(correct) / double(votes) < cfg.min_accuracy) continue;
        kept.push_back(j);
    }
    return kept;
}

// Exhaustive greedy redundancy simulation over a dense matrix.
inline std::vector<std::size_t> redundancy_filter_oracle(const std::vector<std::vector<int>>& dense,
                                                         const std::vector<int>& gold,
                                                         const std::vector<int>& targets,
                                                         const std::vector<std::string>& ids,
                                                         const FilterConfig& cfg) {
    std::size_t m = dense.empty() ? 0 : dense[0].size();
    std::vector<std::set<std::size_t>> cover(m);
    std::vector<double> acc(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        std::size_t votes = 0, correct = 0;
        for (std::size_t i = 0; i < dense.size(); ++i) {
            if (dense[i][j] == kAbstain) continue;
            cover[j].insert(i);
            ++votes;
            if (dense[i][j] == gold[i]) ++correct;
        }
        acc[j] = votes == 0 ? 0.0 : double(correct) / double(votes);
    }
    auto jac = [&](std::size_t a, std::size_t b) {
        if (cover[a].empty() && cover[b].empty()) return 0.0;
        std::size_t inter = 0;
        for (auto i : cover[a]) inter += cover[b].count(i);
        return double(inter) / double(cover[a].size() + cover[b].size() - inter);
    };
    std::set<int> target_set(targets.begin(), targets.end());
    std::vector<char> keep(m, 0);
    for (int t : target_set) {
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < m; ++j)
            if (targets[j] == t) members.push_back(j);
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            if (acc[a] != acc[b]) return acc[a] > acc[b];
            return ids[a] < ids[b];
        });
        std::vector<std::size_t> kept;
        for (std::size_t j : members) {
            bool redundant = false;
            for (std::size_t k : kept)
                if (jac(j, k) >= cfg.redundancy_jaccard) redundant = true;
            if (!redundant) {
                kept.push_back(j);
                keep[j] = 1;
            }
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < m; ++j)
        if (keep[j]) out.push_back(j);
    return out;
}

// Concatenate-and-argmax routing oracle over the voting sub-models.
struct RoutingOracleResult {
    int label = kAbstain;
    double prob = 0.0;
};

inline RoutingOracleResult routing_oracle(const StackedModel& model,
                                          const std::vector<std::pair<int, int>>& votes) {
    std::vector<std::pair<int, double>> concatenated; // (global label, prob)
    for (int g = 0; g < model.partition.K; ++g) {
        std::vector<std::pair<int, int>> local;
        for (const auto& [j, y] : votes)
            if (model.lf_to_group[std::size_t(j)] == g)
                local.emplace_back(model.lf_to_local[std::size_t(j)],
                                   model.label_to_local[std::size_t(y)]);
        if (local.empty()) continue; // abstained group: not a candidate
        const auto& params = model.sub_models[std::size_t(g)];
        std::vector<double> probs;
        if (params.M == 1) {
            probs = {1.0};
        } else {
            std::vector<double> priors(params.priors.data(), params.priors.data() + params.M);
            std::vector<double> acc(params.accuracy.data(),
                                    params.accuracy.data() + params.accuracy.size());
            probs = bayes_posterior(priors, acc, params.M, local);
        }
        const auto& group = model.partition.groups[std::size_t(g)];
        for (std::size_t local_idx = 0; local_idx < group.size(); ++local_idx)
            concatenated.emplace_back(group[local_idx], probs[local_idx]);
    }
    RoutingOracleResult out;
    if (concatenated.empty()) return out;
    std::sort(concatenated.begin(), concatenated.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    out.label = concatenated[0].first;
    out.prob = concatenated[0].second;
    for (const auto& [label, prob] : concatenated) {
        if (prob > out.prob) {
            out.prob = prob;
            out.label = label;
        }
    }
    return out;
}

// Samples a label matrix from the generative model with known parameters.
struct SampledMatrix {
    LabelMatrix matrix;
    std::vector<int> truth;
};

inline SampledMatrix sample_from_model(const std::vector<double>& priors,
                                       const std::vector<double>& propensity,
                                       const std::vector<double>& accuracy, std::size_t n,
                                       std::uint64_t seed) {
    const int M = int(priors.size());
    const std::size_t m = propensity.size();
    Rng rng(seed);
    SampledMatrix out;
    out.matrix.n = n;
    out.matrix.m = m;
    for (std::size_t j = 0; j < m; ++j) out.matrix.lf_ids.push_back("lf" + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i) {
        out.matrix.instance_ids.push_back("inst" + std::to_string(i));
        double r = rng.real01();
        int y = M - 1;
        double cum = 0;
        for (int c = 0; c < M; ++c) {
            cum += priors[std::size_t(c)];
            if (r < cum) {
                y = c;
                break;
            }
        }
        out.truth.push_back(y);
        for (std::size_t j = 0; j < m; ++j) {
            if (rng.real01() >= propensity[j]) continue;
            int vote;
            if (rng.real01() < accuracy[j]) {
                vote = y;
            } else {
                int offset = int(rng.bounded(std::uint64_t(M - 1)));
                vote = offset >= y ? offset + 1 : offset;
            }
            out.matrix.votes.push_back({std::uint32_t(i), std::uint32_t(j), std::uint32_t(vote)});
        }
    }
    return out;
}

// Confusion-matrix evaluation by direct enumeration.
struct EvalOracle {
    double micro_f1 = 0, macro_f1 = 0;
};

inline EvalOracle eval_by_enumeration(const std::vector<int>& preds, const std::vector<int>& gold,
                                      int M) {
    std::size_t predicted = 0, correct = 0;
    std::vector<std::size_t> tp(std::size_t(M), 0), fp(std::size_t(M), 0), fn(std::size_t(M), 0),
        support(std::size_t(M), 0);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        support[std::size_t(gold[i])] += 1;
        if (preds[i] == kAbstain) {
            fn[std::size_t(gold[i])] += 1;
            continue;
        }
        ++predicted;
        if (preds[i] == gold[i]) {
            ++correct;
            tp[std::size_t(preds[i])] += 1;
        } else {
            fp[std::size_t(preds[i])] += 1;
            fn[std::size_t(gold[i])] += 1;
        }
    }
    EvalOracle out;
    double precision = predicted == 0 ? 0.0 : double(correct) / double(predicted);
    double recall = gold.empty() ? 0.0 : double(correct) / double(gold.size());
    out.micro_f1 = precision + recall == 0 ? 0.0 : 2 * precision * recall / (precision + recall);
    double sum = 0;
    std::size_t count = 0;
    for (int y = 0; y < M; ++y) {
        if (support[std::size_t(y)] == 0) continue;
        std::size_t denom = 2 * tp[std::size_t(y)] + fp[std::size_t(y)] + fn[std::size_t(y)];
        sum += denom == 0 ? 0.0 : 2.0 * double(tp[std::size_t(y)]) / double(denom);
        count += 1;
    }
    out.macro_f1 = count == 0 ? 0.0 : sum / double(count);
    return out;
}

inline double binary_f1_oracle(std::size_t tp, std::size_t fp, std::size_t fn) {
    std::size_t d = 2 * tp + fp + fn;
    return d == 0 ? 0.0 : 2.0 * double(tp) / double(d);
}

} // namespace oracle
