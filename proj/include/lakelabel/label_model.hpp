#pragma once

#include "lakelabel/lf.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lakelabel {

struct FitConfig {
    int max_iter = 100;
    double tol = 1e-6;         // convergence threshold on the objective delta
    double param_clamp = 1e-3; // epsilon bound keeping p, a inside (0, 1)
    std::uint64_t rng_seed = 0; // reserved; fitting is fully deterministic
    double smoothing = 1.0;     // Dirichlet pseudo-count on class priors
};

struct FitDiagnostics {
    int iterations = 0;
    double log_likelihood = 0.0; // EM objective: data log-likelihood + prior smoothing term
    bool converged = false;
    std::vector<double> objective_trace; // one entry per E-step, non-decreasing
};

/// Class-conditional accuracy model with abstention:
///   P(votes_i | y) = prod_j [(1-p_j) abstain; p_j a_j vote==y;
///                            p_j (1-a_j)/(M-1) otherwise]
/// The class balance is fixed from the clamped golds (smoothed; uniform
/// without clamps) rather than learned; EM estimates the accuracies.
struct LabelModelParams {
    int M = 0;
    Eigen::VectorXd priors;     // size M
    Eigen::VectorXd propensity; // p_j, size m
    Eigen::VectorXd accuracy;   // a_j, size m
    std::vector<std::string> lf_ids;
    bool unsignaled = false; // set by stacked fits for zero-vote groups
    FitDiagnostics diagnostics;
};

struct Posterior {
    Eigen::VectorXd probs; // sums to 1 within 1e-9
    int argmax = 0;        // ties broken by smallest label index
    double max_prob = 0.0;
    bool abstained = false; // true iff the instance received zero votes
};

// Semi-supervised EM. `clamped` maps instance index -> gold label; those
// instances keep a fixed one-hot posterior throughout. Unclamped rows
// with zero votes are excluded from the fit: their likelihood is flat in
// the priors and accuracies, so they contribute nothing but prior echo.
LabelModelParams fit(const LabelMatrix& matrix, int M, const std::map<std::size_t, int>& clamped,
                     const FitConfig& cfg);

// votes: (lf index, label) pairs for one instance.
Posterior posterior(const LabelModelParams& params, const std::vector<std::pair<int, int>>& votes);

std::vector<Posterior> predict(const LabelModelParams& params, const LabelMatrix& matrix);

// Baseline aggregator: most frequent non-abstain vote per instance, ties
// to the smallest label index, kAbstain when no LF votes.
std::vector<int> majority_vote(const LabelMatrix& matrix, int M);

// Canonical textual parameter record (17-significant-digit decimals).
std::string params_to_text(const LabelModelParams& params);
LabelModelParams params_from_text(const std::string& text);

} // namespace lakelabel
