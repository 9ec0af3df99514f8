#include "lakelabel/label_model.hpp"

#include "lakelabel/text.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lakelabel {

namespace {

double clamp_param(double v, double eps) { return std::min(std::max(v, eps), 1.0 - eps); }

// logw holds unnormalized log posterior; returns log-sum-exp.
double log_sum_exp(const Eigen::VectorXd& logw) {
    double mx = logw.maxCoeff();
    return mx + std::log((logw.array() - mx).exp().sum());
}

int argmax_smallest_index(const Eigen::VectorXd& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

void check_matrix(const LabelMatrix& matrix, int M) {
    for (const auto& v : matrix.votes)
        if (static_cast<int>(v.label) >= M)
            throw Error("vote label " + std::to_string(v.label) + " out of range for M=" +
                        std::to_string(M));
}

} // namespace

LabelModelParams fit(const LabelMatrix& matrix, int M, const std::map<std::size_t, int>& clamped,
                     const FitConfig& cfg) {
    if (M < 2) throw Error("label model requires M >= 2");
    if (matrix.votes.empty()) throw Error("no signal: label matrix contains zero votes");
    if (!(cfg.tol > 0.0)) throw Error("fit tol must be > 0");
    if (!(cfg.param_clamp > 0.0 && cfg.param_clamp < 0.5))
        throw Error("param clamp must be in (0, 0.5)");
    check_matrix(matrix, M);
    for (const auto& [i, y] : clamped) {
        if (i >= matrix.n) throw Error("clamped instance " + std::to_string(i) + " out of range");
        if (y < 0 || y >= M) throw Error("clamped gold label out of range");
    }

    const std::size_t m = matrix.m;
    const double eps = cfg.param_clamp;
    auto rows = matrix.rows();

    std::vector<int> clamp_of(matrix.n, kAbstain);
    for (const auto& [i, y] : clamped) clamp_of[i] = y;

    // Rows with no votes and no clamp carry no label information (their
    // likelihood is flat in both priors and accuracies) and only echo the
    // priors through the E-step, which can snowball into a degenerate
    // fixpoint. The model is fitted on the informative rows.
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < matrix.n; ++i)
        if (!rows[i].empty() || clamp_of[i] != kAbstain) kept.push_back(i);
    const std::size_t n = kept.size();

    LabelModelParams params;
    params.M = M;
    params.lf_ids = matrix.lf_ids;
    if (params.lf_ids.size() != m) {
        params.lf_ids.resize(m);
        for (std::size_t j = 0; j < m; ++j)
            if (params.lf_ids[j].empty()) params.lf_ids[j] = "lf" + std::to_string(j);
    }

    Eigen::VectorXd votes_per_lf = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (const auto& v : matrix.votes) votes_per_lf[v.lf] += 1.0;

    params.propensity.resize(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) {
        Eigen::Index je = static_cast<Eigen::Index>(j);
        params.propensity[je] = clamp_param(votes_per_lf[je] / static_cast<double>(n), eps);
    }

    params.accuracy = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), 0.7);

    // Class balance is taken as given, not learned: the smoothed empirical
    // distribution of the clamped golds (uniform without clamps). Learning
    // priors jointly lets the uncertain single-vote classes leak posterior
    // mass into whichever class is best covered, and the resulting
    // prior/accuracy spiral collapses minority classes.
    params.priors.resize(M);
    if (clamped.empty()) {
        params.priors.setConstant(1.0 / static_cast<double>(M));
    } else {
        Eigen::VectorXd counts = Eigen::VectorXd::Constant(M, cfg.smoothing);
        for (const auto& [i, y] : clamped) counts[y] += 1.0;
        params.priors = counts / counts.sum();
    }

    // Per-instance propensity constant: sum of log p over voters plus
    // log(1-p) over abstainers; independent of y and of EM iterations.
    Eigen::VectorXd log_p(static_cast<Eigen::Index>(m)), log_1mp(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) {
        log_p[static_cast<Eigen::Index>(j)] = std::log(params.propensity[static_cast<Eigen::Index>(j)]);
        log_1mp[static_cast<Eigen::Index>(j)] =
            std::log(1.0 - params.propensity[static_cast<Eigen::Index>(j)]);
    }
    const double total_log_1mp = log_1mp.sum();
    std::vector<double> propensity_const(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double c = total_log_1mp;
        for (const auto& [j, v] : rows[kept[k]]) c += log_p[j] - log_1mp[j];
        propensity_const[k] = c;
    }

    const Eigen::VectorXd log_priors = params.priors.array().max(1e-300).log().matrix();

    auto& diag = params.diagnostics;
    double prev_obj = 0.0;
    Eigen::VectorXd logw(M), q(M);
    Eigen::VectorXd acc_num(static_cast<Eigen::Index>(m));

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        Eigen::VectorXd log_a(static_cast<Eigen::Index>(m)), log_wrong(static_cast<Eigen::Index>(m));
        for (std::size_t j = 0; j < m; ++j) {
            double a = params.accuracy[static_cast<Eigen::Index>(j)];
            log_a[static_cast<Eigen::Index>(j)] = std::log(a);
            log_wrong[static_cast<Eigen::Index>(j)] = std::log((1.0 - a) / static_cast<double>(M - 1));
        }

        acc_num.setZero();
        double obj = 0.0;

        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = kept[k];
            logw = log_priors;
            for (const auto& [j, v] : rows[i]) {
                logw.array() += log_wrong[j];
                logw[v] += log_a[j] - log_wrong[j];
            }
            if (clamp_of[i] != kAbstain) {
                int y = clamp_of[i];
                obj += logw[y] + propensity_const[k];
                for (const auto& [j, v] : rows[i]) acc_num[j] += (v == y) ? 1.0 : 0.0;
            } else {
                double lse = log_sum_exp(logw);
                obj += lse + propensity_const[k];
                q = (logw.array() - lse).exp().matrix();
                for (const auto& [j, v] : rows[i]) acc_num[j] += q[v];
            }
        }
        diag.objective_trace.push_back(obj);
        diag.iterations = iter + 1;
        diag.log_likelihood = obj;

        if (iter > 0 && std::abs(obj - prev_obj) < cfg.tol) {
            diag.converged = true;
            break;
        }
        prev_obj = obj;

        // M-step over the accuracies; propensities are closed-form and the
        // class balance is fixed, so this is a (monotone) ECM update.
        for (std::size_t j = 0; j < m; ++j) {
            Eigen::Index je = static_cast<Eigen::Index>(j);
            if (votes_per_lf[je] > 0.0)
                params.accuracy[je] = clamp_param(acc_num[je] / votes_per_lf[je], eps);
        }
    }
    return params;
}

Posterior posterior(const LabelModelParams& params, const std::vector<std::pair<int, int>>& votes) {
    Posterior post;
    if (votes.empty()) {
        post.probs = params.priors;
        post.abstained = true;
        post.argmax = argmax_smallest_index(post.probs);
        post.max_prob = post.probs[post.argmax];
        return post;
    }
    const int M = params.M;
    Eigen::VectorXd logw = params.priors.array().max(1e-300).log().matrix();
    for (const auto& [j, v] : votes) {
        if (j < 0 || j >= params.accuracy.size()) throw Error("vote LF index out of range");
        if (v < 0 || v >= M) throw Error("vote label out of range");
        double a = params.accuracy[j];
        double log_wrong = std::log((1.0 - a) / static_cast<double>(M - 1));
        logw.array() += log_wrong;
        logw[v] += std::log(a) - log_wrong;
    }
    double lse = log_sum_exp(logw);
    post.probs = (logw.array() - lse).exp().matrix();
    post.abstained = false;
    post.argmax = argmax_smallest_index(post.probs);
    post.max_prob = post.probs[post.argmax];
    return post;
}

std::vector<Posterior> predict(const LabelModelParams& params, const LabelMatrix& matrix) {
    check_matrix(matrix, params.M);
    auto rows = matrix.rows();
    std::vector<Posterior> out;
    out.reserve(matrix.n);
    for (const auto& row : rows) out.push_back(posterior(params, row));
    return out;
}

std::vector<int> majority_vote(const LabelMatrix& matrix, int M) {
    check_matrix(matrix, M);
    auto rows = matrix.rows();
    std::vector<int> out(matrix.n, kAbstain);
    std::vector<int> counts(static_cast<std::size_t>(M));
    for (std::size_t i = 0; i < matrix.n; ++i) {
        if (rows[i].empty()) continue;
        std::fill(counts.begin(), counts.end(), 0);
        for (const auto& [j, v] : rows[i]) counts[static_cast<std::size_t>(v)] += 1;
        int best = 0;
        for (int y = 1; y < M; ++y)
            if (counts[static_cast<std::size_t>(y)] > counts[static_cast<std::size_t>(best)]) best = y;
        out[i] = best;
    }
    return out;
}

std::string params_to_text(const LabelModelParams& params) {
    std::ostringstream out;
    out << "labelmodel v1\n";
    out << "M " << params.M << "\n";
    out << "lf_count " << params.lf_ids.size() << "\n";
    out << "unsignaled " << (params.unsignaled ? 1 : 0) << "\n";
    out << "converged " << (params.diagnostics.converged ? 1 : 0) << "\n";
    out << "iterations " << params.diagnostics.iterations << "\n";
    out << "log_likelihood " << format_g17(params.diagnostics.log_likelihood) << "\n";
    for (int y = 0; y < params.M; ++y)
        out << "prior " << y << " " << format_g17(params.priors[y]) << "\n";
    for (std::size_t j = 0; j < params.lf_ids.size(); ++j)
        out << "lf " << params.lf_ids[j] << " "
            << format_g17(params.propensity[static_cast<Eigen::Index>(j)]) << " "
            << format_g17(params.accuracy[static_cast<Eigen::Index>(j)]) << "\n";
    return out.str();
}

LabelModelParams params_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "labelmodel v1")
        throw Error("params file: bad magic line");
    LabelModelParams params;
    std::size_t lf_count = 0;
    std::size_t prior_seen = 0, lf_seen = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "M") {
            ls >> params.M;
            params.priors = Eigen::VectorXd::Zero(params.M);
        } else if (key == "lf_count") {
            ls >> lf_count;
            params.lf_ids.resize(lf_count);
            params.propensity = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lf_count));
            params.accuracy = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lf_count));
        } else if (key == "unsignaled") {
            int v = 0;
            ls >> v;
            params.unsignaled = v != 0;
        } else if (key == "converged") {
            int v = 0;
            ls >> v;
            params.diagnostics.converged = v != 0;
        } else if (key == "iterations") {
            ls >> params.diagnostics.iterations;
        } else if (key == "log_likelihood") {
            ls >> params.diagnostics.log_likelihood;
        } else if (key == "prior") {
            int y = 0;
            double v = 0.0;
            ls >> y >> v;
            if (y < 0 || y >= params.M) throw Error("params file: prior index out of range");
            params.priors[y] = v;
            ++prior_seen;
        } else if (key == "lf") {
            std::string id;
            double p = 0.0, a = 0.0;
            ls >> id >> p >> a;
            if (lf_seen >= lf_count) throw Error("params file: more lf lines than lf_count");
            params.lf_ids[lf_seen] = id;
            params.propensity[static_cast<Eigen::Index>(lf_seen)] = p;
            params.accuracy[static_cast<Eigen::Index>(lf_seen)] = a;
            ++lf_seen;
        } else {
            throw Error("params file: unknown key '" + key + "'");
        }
        if (ls.fail()) throw Error("params file: malformed line '" + line + "'");
    }
    if (prior_seen != static_cast<std::size_t>(params.M))
        throw Error("params file: expected " + std::to_string(params.M) + " prior lines");
    if (lf_seen != lf_count) throw Error("params file: expected " + std::to_string(lf_count) + " lf lines");
    return params;
}

} // namespace lakelabel
