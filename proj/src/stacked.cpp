#include "lakelabel/stacked.hpp"

#include "lakelabel/http_util.hpp"
#include "lakelabel/parallel.hpp"
#include "lakelabel/rng.hpp"
#include "lakelabel/text.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

namespace lakelabel {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

int Partition::total_labels() const {
    int total = 0;
    for (const auto& g : groups) total += static_cast<int>(g.size());
    return total;
}

void Partition::validate(int M) const {
    if (K != static_cast<int>(groups.size()))
        throw Error("partition K does not match group count");
    std::vector<char> seen(static_cast<std::size_t>(M), 0);
    for (const auto& g : groups) {
        if (g.empty()) throw Error("partition contains an empty group");
        for (int label : g) {
            if (label < 0 || label >= M)
                throw Error("partition label index " + std::to_string(label) + " out of range");
            if (seen[static_cast<std::size_t>(label)])
                throw Error("partition assigns label " + std::to_string(label) + " twice");
            seen[static_cast<std::size_t>(label)] = 1;
        }
    }
    for (int y = 0; y < M; ++y)
        if (!seen[static_cast<std::size_t>(y)])
            throw Error("partition misses label " + std::to_string(y));
}

Partition single_partition(int M) {
    if (M < 1) throw Error("vocabulary is empty");
    Partition p;
    p.K = 1;
    p.method = "single";
    p.groups.emplace_back();
    for (int y = 0; y < M; ++y) p.groups[0].push_back(y);
    return p;
}

// ---------------------------------------------------------------------------
// Embeddings

Eigen::MatrixXd embed_labels(const LabelVocabulary& vocabulary, int dim) {
    if (dim < 1) throw Error("embedding dimension must be >= 1");
    const int M = vocabulary.size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(M, dim);
    for (int y = 0; y < M; ++y) {
        std::string name = ascii_lower(vocabulary.name(y));
        auto bump = [&](std::string_view gram) {
            out(y, static_cast<Eigen::Index>(fnv1a64(gram) % static_cast<std::uint64_t>(dim))) += 1.0;
        };
        if (name.size() >= 3) {
            for (std::size_t i = 0; i + 3 <= name.size(); ++i) bump(std::string_view(name).substr(i, 3));
        } else {
            for (std::size_t i = 0; i < name.size(); ++i) bump(std::string_view(name).substr(i, 1));
        }
        double norm = out.row(y).norm();
        if (norm > 0.0) out.row(y) /= norm;
    }
    return out;
}

Eigen::MatrixXd embed_labels_external(const LabelVocabulary& vocabulary, const std::string& endpoint,
                                      int dim) {
    nlohmann::json body;
    body["labels"] = vocabulary.names();
    body["dim"] = dim;
    nlohmann::json resp = http_post_json(endpoint, body);
    if (!resp.contains("vectors") || !resp["vectors"].is_array() ||
        resp["vectors"].size() != static_cast<std::size_t>(vocabulary.size()))
        throw Error("embedding endpoint returned wrong vector count");
    Eigen::MatrixXd out(vocabulary.size(), dim);
    for (int y = 0; y < vocabulary.size(); ++y) {
        const auto& vec = resp["vectors"][static_cast<std::size_t>(y)];
        if (!vec.is_array() || vec.size() != static_cast<std::size_t>(dim))
            throw Error("embedding endpoint returned wrong dimension for label '" +
                        vocabulary.name(y) + "'");
        for (int d = 0; d < dim; ++d) {
            double v = vec[static_cast<std::size_t>(d)].get<double>();
            if (!std::isfinite(v))
                throw Error("embedding endpoint returned non-finite entry for label '" +
                            vocabulary.name(y) + "'");
            out(y, d) = v;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// k-means

Partition kmeans_partition(const Eigen::MatrixXd& embeddings, int K, std::uint64_t rng_seed) {
    const int M = static_cast<int>(embeddings.rows());
    if (K < 1) throw Error("K must be >= 1");
    if (K > M) throw Error("K=" + std::to_string(K) + " exceeds label count M=" + std::to_string(M));

    Rng rng(rng_seed);
    Eigen::MatrixXd centers(K, embeddings.cols());
    centers.row(0) = embeddings.row(static_cast<Eigen::Index>(rng.bounded(static_cast<std::uint64_t>(M))));

    Eigen::VectorXd d2 = Eigen::VectorXd::Constant(M, std::numeric_limits<double>::infinity());
    for (int k = 1; k < K; ++k) {
        for (int i = 0; i < M; ++i)
            d2[i] = std::min(d2[i], (embeddings.row(i) - centers.row(k - 1)).squaredNorm());
        double total = d2.sum();
        int pick;
        if (total <= 0.0) {
            pick = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(M)));
        } else {
            double r = rng.real01() * total;
            double cum = 0.0;
            pick = M - 1;
            for (int i = 0; i < M; ++i) {
                cum += d2[i];
                if (cum > r) {
                    pick = i;
                    break;
                }
            }
        }
        centers.row(k) = embeddings.row(pick);
    }

    std::vector<int> assignment(static_cast<std::size_t>(M), 0);
    std::vector<int> previous;
    for (int round = 0; round < 300; ++round) {
        // Assign: nearest center, ties to the smaller index.
        for (int i = 0; i < M; ++i) {
            int best = 0;
            double best_d = (embeddings.row(i) - centers.row(0)).squaredNorm();
            for (int k = 1; k < K; ++k) {
                double d = (embeddings.row(i) - centers.row(k)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            assignment[static_cast<std::size_t>(i)] = best;
        }

        // Repair empty clusters by stealing the farthest point from any
        // cluster that can spare one.
        std::vector<int> sizes(static_cast<std::size_t>(K), 0);
        for (int a : assignment) sizes[static_cast<std::size_t>(a)] += 1;
        for (int k = 0; k < K; ++k) {
            if (sizes[static_cast<std::size_t>(k)] > 0) continue;
            int victim = -1;
            double worst = -1.0;
            for (int i = 0; i < M; ++i) {
                int a = assignment[static_cast<std::size_t>(i)];
                if (sizes[static_cast<std::size_t>(a)] < 2) continue;
                double d = (embeddings.row(i) - centers.row(a)).squaredNorm();
                if (d > worst) {
                    worst = d;
                    victim = i;
                }
            }
            if (victim < 0) throw Error("k-means cannot repair empty cluster");
            sizes[static_cast<std::size_t>(assignment[static_cast<std::size_t>(victim)])] -= 1;
            assignment[static_cast<std::size_t>(victim)] = k;
            sizes[static_cast<std::size_t>(k)] += 1;
        }

        if (assignment == previous) break;
        previous = assignment;

        // Update.
        centers.setZero();
        for (int i = 0; i < M; ++i) centers.row(assignment[static_cast<std::size_t>(i)]) += embeddings.row(i);
        for (int k = 0; k < K; ++k) centers.row(k) /= static_cast<double>(sizes[static_cast<std::size_t>(k)]);
    }

    Partition p;
    p.K = K;
    p.method = "kmeans";
    p.provenance = "char_ngram_hash dim=" + std::to_string(embeddings.cols()) +
                   " seed=" + std::to_string(rng_seed);
    p.groups.assign(static_cast<std::size_t>(K), {});
    for (int i = 0; i < M; ++i) p.groups[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])].push_back(i);
    for (auto& g : p.groups) std::sort(g.begin(), g.end());
    p.validate(M);
    return p;
}

// ---------------------------------------------------------------------------
// Hierarchy

namespace {

// nlohmann silently keeps the last duplicate key, so duplicates are
// detected with a parser callback before the real parse.
void check_duplicate_top_level_keys(const std::string& text) {
    std::vector<std::string> keys;
    int object_depth = 0;
    nlohmann::json::parser_callback_t cb = [&](int /*depth*/, nlohmann::json::parse_event_t event,
                                               nlohmann::json& parsed) {
        if (event == nlohmann::json::parse_event_t::object_start) ++object_depth;
        if (event == nlohmann::json::parse_event_t::object_end) --object_depth;
        if (event == nlohmann::json::parse_event_t::key && object_depth == 1)
            keys.push_back(parsed.get<std::string>());
        return true;
    };
    try {
        auto parsed = nlohmann::json::parse(text, cb);
        (void)parsed;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed hierarchy file: ") + e.what());
    }
    std::set<std::string> seen;
    for (const auto& k : keys)
        if (!seen.insert(k).second) throw Error("hierarchy maps label '" + k + "' more than once");
}

} // namespace

Partition hierarchy_partition_from_text(const std::string& text, const LabelVocabulary& vocabulary,
                                        const std::string& source_name) {
    check_duplicate_top_level_keys(text);
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed hierarchy file: ") + e.what());
    }
    if (!doc.is_object()) throw Error("hierarchy file must be a JSON object {label: category}");

    std::map<std::string, std::vector<int>> by_category;
    std::vector<char> mapped(static_cast<std::size_t>(vocabulary.size()), 0);
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        auto idx = vocabulary.index_of(it.key());
        if (!idx) throw Error("hierarchy maps unknown label '" + it.key() + "'");
        if (!it.value().is_string())
            throw Error("hierarchy category for '" + it.key() + "' must be a string");
        if (mapped[static_cast<std::size_t>(*idx)])
            throw Error("hierarchy maps label '" + it.key() + "' more than once");
        mapped[static_cast<std::size_t>(*idx)] = 1;
        by_category[it.value().get<std::string>()].push_back(*idx);
    }
    for (int y = 0; y < vocabulary.size(); ++y)
        if (!mapped[static_cast<std::size_t>(y)])
            throw Error("hierarchy is missing label '" + vocabulary.name(y) + "'");

    Partition p;
    p.method = "hierarchy";
    p.provenance = source_name;
    for (auto& [cat, labels] : by_category) {
        std::sort(labels.begin(), labels.end());
        p.groups.push_back(labels);
    }
    p.K = static_cast<int>(p.groups.size());
    p.validate(vocabulary.size());
    return p;
}

// ---------------------------------------------------------------------------
// Stacked fit / routing

namespace {

LabelModelParams singleton_params(const LabelMatrix& local, double eps) {
    LabelModelParams params;
    params.M = 1;
    params.priors = Eigen::VectorXd::Ones(1);
    params.lf_ids = local.lf_ids;
    params.propensity.resize(static_cast<Eigen::Index>(local.m));
    params.accuracy = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(local.m), 1.0 - eps);
    std::vector<double> votes(local.m, 0.0);
    for (const auto& v : local.votes) votes[v.lf] += 1.0;
    for (std::size_t j = 0; j < local.m; ++j)
        params.propensity[static_cast<Eigen::Index>(j)] =
            std::min(std::max(local.n == 0 ? 0.0 : votes[j] / static_cast<double>(local.n), eps),
                     1.0 - eps);
    params.diagnostics.converged = true;
    return params;
}

LabelModelParams unsignaled_params(const LabelMatrix& local, int local_M, double eps) {
    LabelModelParams params;
    params.M = local_M;
    params.priors = Eigen::VectorXd::Constant(local_M, 1.0 / static_cast<double>(local_M));
    params.lf_ids = local.lf_ids;
    params.propensity = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(local.m), eps);
    params.accuracy = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(local.m), 0.7);
    params.unsignaled = true;
    return params;
}

} // namespace

StackedModel fit_stacked(const LabelMatrix& matrix, const std::vector<int>& lf_targets,
                         const Partition& partition, const std::map<std::size_t, int>& clamped,
                         const FitConfig& cfg) {
    const int M = partition.total_labels();
    partition.validate(M);
    if (lf_targets.size() != matrix.m)
        throw Error("lf_targets size does not match matrix LF count");

    StackedModel model;
    model.partition = partition;
    model.monolithic_cells = matrix.n * matrix.m;
    model.label_to_group.assign(static_cast<std::size_t>(M), -1);
    model.label_to_local.assign(static_cast<std::size_t>(M), -1);
    for (int g = 0; g < partition.K; ++g) {
        const auto& group = partition.groups[static_cast<std::size_t>(g)];
        for (std::size_t local = 0; local < group.size(); ++local) {
            model.label_to_group[static_cast<std::size_t>(group[local])] = g;
            model.label_to_local[static_cast<std::size_t>(group[local])] = static_cast<int>(local);
        }
    }

    model.lf_columns.assign(static_cast<std::size_t>(partition.K), {});
    model.lf_to_group.assign(matrix.m, -1);
    model.lf_to_local.assign(matrix.m, -1);
    for (std::size_t j = 0; j < matrix.m; ++j) {
        int target = lf_targets[j];
        if (target < 0 || target >= M)
            throw Error("lf_targets[" + std::to_string(j) + "] out of range");
        int g = model.label_to_group[static_cast<std::size_t>(target)];
        model.lf_to_group[j] = g;
        model.lf_to_local[j] = static_cast<int>(model.lf_columns[static_cast<std::size_t>(g)].size());
        model.lf_columns[static_cast<std::size_t>(g)].push_back(static_cast<int>(j));
    }

    // Local matrices, one per group.
    std::vector<LabelMatrix> locals(static_cast<std::size_t>(partition.K));
    for (int g = 0; g < partition.K; ++g) {
        auto& local = locals[static_cast<std::size_t>(g)];
        local.n = matrix.n;
        local.m = model.lf_columns[static_cast<std::size_t>(g)].size();
        local.instance_ids = matrix.instance_ids;
        for (int j : model.lf_columns[static_cast<std::size_t>(g)]) {
            // Fall back to globally unique ids when the matrix carries none.
            if (static_cast<std::size_t>(j) < matrix.lf_ids.size() &&
                !matrix.lf_ids[static_cast<std::size_t>(j)].empty())
                local.lf_ids.push_back(matrix.lf_ids[static_cast<std::size_t>(j)]);
            else
                local.lf_ids.push_back("lf" + std::to_string(j));
        }
    }
    for (const auto& v : matrix.votes) {
        int g = model.lf_to_group[v.lf];
        int local_label = model.label_to_local[v.label];
        if (model.label_to_group[v.label] != g)
            throw Error("matrix vote label " + std::to_string(v.label) +
                        " is outside the voting LF's group");
        locals[static_cast<std::size_t>(g)].votes.push_back(
            {v.instance, static_cast<std::uint32_t>(model.lf_to_local[v.lf]),
             static_cast<std::uint32_t>(local_label)});
    }

    std::vector<std::map<std::size_t, int>> local_clamped(static_cast<std::size_t>(partition.K));
    for (const auto& [i, y] : clamped) {
        if (y < 0 || y >= M) throw Error("clamped gold label out of range");
        int g = model.label_to_group[static_cast<std::size_t>(y)];
        local_clamped[static_cast<std::size_t>(g)][i] = model.label_to_local[static_cast<std::size_t>(y)];
    }

    model.sub_models.resize(static_cast<std::size_t>(partition.K));
    model.footprints.resize(static_cast<std::size_t>(partition.K));
    parallel_for(static_cast<std::size_t>(partition.K), hardware_workers(), [&](std::size_t g) {
        const auto& local = locals[g];
        const int local_M = static_cast<int>(partition.groups[g].size());
        model.footprints[g] = {local.n, local.m, static_cast<std::size_t>(local_M),
                               local.n * local.m};
        if (local.votes.empty()) {
            model.sub_models[g] = unsignaled_params(local, local_M, cfg.param_clamp);
        } else if (local_M == 1) {
            model.sub_models[g] = singleton_params(local, cfg.param_clamp);
        } else {
            model.sub_models[g] = fit(local, local_M, local_clamped[g], cfg);
        }
    });
    return model;
}

namespace {

Posterior group_posterior(const LabelModelParams& params,
                          const std::vector<std::pair<int, int>>& local_votes) {
    if (params.M == 1) {
        Posterior post;
        post.probs = Eigen::VectorXd::Ones(1);
        post.argmax = 0;
        post.max_prob = 1.0;
        post.abstained = local_votes.empty();
        return post;
    }
    return posterior(params, local_votes);
}

} // namespace

RoutedPrediction route_predict(const StackedModel& model,
                               const std::vector<std::pair<int, int>>& votes) {
    const int K = model.partition.K;
    const int M = model.total_labels();
    std::vector<std::vector<std::pair<int, int>>> local_votes(static_cast<std::size_t>(K));
    for (const auto& [j, y] : votes) {
        if (j < 0 || static_cast<std::size_t>(j) >= model.lf_to_group.size())
            throw Error("vote LF index out of range");
        if (y < 0 || y >= M) throw Error("vote label out of range");
        int g = model.lf_to_group[static_cast<std::size_t>(j)];
        if (model.label_to_group[static_cast<std::size_t>(y)] != g)
            throw Error("vote label outside the voting LF's group");
        local_votes[static_cast<std::size_t>(g)].emplace_back(
            model.lf_to_local[static_cast<std::size_t>(j)],
            model.label_to_local[static_cast<std::size_t>(y)]);
    }

    RoutedPrediction routed;
    routed.per_group.resize(static_cast<std::size_t>(K));
    routed.global_probs = Eigen::VectorXd::Zero(M);
    std::size_t voting_groups = 0;
    for (int g = 0; g < K; ++g) {
        Posterior post = group_posterior(model.sub_models[static_cast<std::size_t>(g)],
                                         local_votes[static_cast<std::size_t>(g)]);
        if (!post.abstained) ++voting_groups;
        routed.per_group[static_cast<std::size_t>(g)] = std::move(post);
    }

    // Abstained sub-models only report their priors; they compete for the
    // routed label only when every group abstained, which is the global
    // ABSTAIN case. The exported distribution spreads one common 1/count
    // weight over the competing groups, which keeps the cross-group argmax
    // identical to the routing decision.
    bool all_abstained = voting_groups == 0;
    double weight = 1.0 / static_cast<double>(all_abstained ? K : voting_groups);
    for (int g = 0; g < K; ++g) {
        const Posterior& post = routed.per_group[static_cast<std::size_t>(g)];
        if (!all_abstained && post.abstained) continue; // contributes zero mass
        const auto& group = model.partition.groups[static_cast<std::size_t>(g)];
        for (std::size_t local = 0; local < group.size(); ++local)
            routed.global_probs[group[local]] =
                post.probs[static_cast<Eigen::Index>(local)] * weight;
    }

    if (all_abstained) {
        routed.abstained = true;
        routed.label = kAbstain;
        routed.prob = 0.0;
        return routed;
    }

    // Max posterior across the voting sub-models; scanning labels in
    // ascending global order makes ties resolve to the smallest index.
    int best_label = 0;
    double best_prob = -1.0;
    for (int y = 0; y < M; ++y) {
        int g = model.label_to_group[static_cast<std::size_t>(y)];
        const Posterior& post = routed.per_group[static_cast<std::size_t>(g)];
        if (post.abstained) continue;
        double p = post.probs[model.label_to_local[static_cast<std::size_t>(y)]];
        if (p > best_prob) {
            best_prob = p;
            best_label = y;
        }
    }
    routed.label = best_label;
    routed.prob = best_prob;
    return routed;
}

std::vector<RoutedPrediction> route_predict_all(const StackedModel& model, const LabelMatrix& matrix) {
    auto rows = matrix.rows();
    std::vector<RoutedPrediction> out(matrix.n);
    parallel_for(matrix.n, hardware_workers(), [&](std::size_t i) { out[i] = route_predict(model, rows[i]); });
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

void save_stacked(const StackedModel& model, const LabelVocabulary& vocabulary,
                  const std::string& dir) {
    fs::create_directories(dir);
    ordered_json manifest;
    manifest["K"] = model.partition.K;
    manifest["method"] = model.partition.method;
    manifest["provenance"] = model.partition.provenance;
    manifest["groups"] = ordered_json::array();
    for (const auto& g : model.partition.groups) {
        ordered_json names = ordered_json::array();
        for (int y : g) names.push_back(vocabulary.name(y));
        manifest["groups"].push_back(std::move(names));
    }
    manifest["lf_assignment"] = ordered_json::array();
    for (std::size_t g = 0; g < model.sub_models.size(); ++g)
        manifest["lf_assignment"].push_back(model.sub_models[g].lf_ids);
    ordered_json global_ids = ordered_json::array();
    {
        std::vector<std::string> ids(model.lf_to_group.size());
        for (std::size_t g = 0; g < model.lf_columns.size(); ++g)
            for (std::size_t local = 0; local < model.lf_columns[g].size(); ++local)
                ids[static_cast<std::size_t>(model.lf_columns[g][local])] =
                    model.sub_models[g].lf_ids[local];
        for (const auto& id : ids) global_ids.push_back(id);
    }
    manifest["lf_ids"] = std::move(global_ids);
    manifest["monolithic_cells"] = model.monolithic_cells;
    manifest["footprints"] = ordered_json::array();
    for (const auto& f : model.footprints) {
        ordered_json jf;
        jf["instances"] = f.instances;
        jf["lf_count"] = f.lf_count;
        jf["label_count"] = f.label_count;
        jf["matrix_cells"] = f.matrix_cells;
        manifest["footprints"].push_back(std::move(jf));
    }
    ordered_json files = ordered_json::array();
    for (std::size_t g = 0; g < model.sub_models.size(); ++g) {
        char name[32];
        std::snprintf(name, sizeof(name), "group_%03zu.txt", g);
        files.push_back(std::string(name));
        write_text_file((fs::path(dir) / name).string(), params_to_text(model.sub_models[g]));
    }
    manifest["files"] = std::move(files);
    write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

StackedModel load_stacked(const std::string& dir, const LabelVocabulary& vocabulary) {
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(read_text_file((fs::path(dir) / "manifest.json").string()));
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed stacked manifest: ") + e.what());
    }

    StackedModel model;
    model.partition.K = manifest.at("K").get<int>();
    model.partition.method = manifest.at("method").get<std::string>();
    model.partition.provenance = manifest.at("provenance").get<std::string>();
    for (const auto& jg : manifest.at("groups")) {
        std::vector<int> group;
        for (const auto& name : jg) {
            auto idx = vocabulary.index_of(name.get<std::string>());
            if (!idx) throw Error("stacked manifest references unknown label '" +
                                  name.get<std::string>() + "'");
            group.push_back(*idx);
        }
        model.partition.groups.push_back(std::move(group));
    }
    const int M = vocabulary.size();
    model.partition.validate(M);

    model.label_to_group.assign(static_cast<std::size_t>(M), -1);
    model.label_to_local.assign(static_cast<std::size_t>(M), -1);
    for (int g = 0; g < model.partition.K; ++g) {
        const auto& group = model.partition.groups[static_cast<std::size_t>(g)];
        for (std::size_t local = 0; local < group.size(); ++local) {
            model.label_to_group[static_cast<std::size_t>(group[local])] = g;
            model.label_to_local[static_cast<std::size_t>(group[local])] = static_cast<int>(local);
        }
    }

    std::vector<std::string> global_ids;
    for (const auto& id : manifest.at("lf_ids")) global_ids.push_back(id.get<std::string>());
    std::map<std::string, int> id_to_column;
    for (std::size_t j = 0; j < global_ids.size(); ++j)
        id_to_column[global_ids[j]] = static_cast<int>(j);

    const auto& files = manifest.at("files");
    if (files.size() != static_cast<std::size_t>(model.partition.K))
        throw Error("stacked manifest: file count does not match K");
    model.lf_columns.assign(static_cast<std::size_t>(model.partition.K), {});
    model.lf_to_group.assign(global_ids.size(), -1);
    model.lf_to_local.assign(global_ids.size(), -1);
    model.monolithic_cells = manifest.value("monolithic_cells", std::size_t{0});
    for (int g = 0; g < model.partition.K; ++g) {
        std::string fname = files[static_cast<std::size_t>(g)].get<std::string>();
        LabelModelParams params = params_from_text(read_text_file((fs::path(dir) / fname).string()));
        for (std::size_t local = 0; local < params.lf_ids.size(); ++local) {
            auto it = id_to_column.find(params.lf_ids[local]);
            if (it == id_to_column.end())
                throw Error("stacked manifest: LF id '" + params.lf_ids[local] +
                            "' missing from lf_ids");
            model.lf_columns[static_cast<std::size_t>(g)].push_back(it->second);
            model.lf_to_group[static_cast<std::size_t>(it->second)] = g;
            model.lf_to_local[static_cast<std::size_t>(it->second)] = static_cast<int>(local);
        }
        model.sub_models.push_back(std::move(params));
    }
    if (manifest.contains("footprints")) {
        for (const auto& jf : manifest["footprints"]) {
            GroupFootprint f;
            f.instances = jf.at("instances").get<std::size_t>();
            f.lf_count = jf.at("lf_count").get<std::size_t>();
            f.label_count = jf.at("label_count").get<std::size_t>();
            f.matrix_cells = jf.at("matrix_cells").get<std::size_t>();
            model.footprints.push_back(f);
        }
    }
    return model;
}

} // namespace lakelabel
