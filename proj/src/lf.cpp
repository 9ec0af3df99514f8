#include "lakelabel/lf.hpp"

#include "lakelabel/text.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

namespace lakelabel {

using ordered_json = nlohmann::ordered_json;

std::string lf_kind_name(LfKind kind) {
    switch (kind) {
        case LfKind::Keyword: return "keyword";
        case LfKind::Statistical: return "statistical";
        case LfKind::Regex: return "regex";
    }
    throw Error("invalid LF kind");
}

std::string comparator_name(Comparator cmp) {
    switch (cmp) {
        case Comparator::Less: return "<";
        case Comparator::LessEq: return "<=";
        case Comparator::Eq: return "=";
        case Comparator::GreaterEq: return ">=";
        case Comparator::Greater: return ">";
    }
    throw Error("invalid comparator");
}

namespace {

const std::set<std::string>& known_stats() {
    static const std::set<std::string> stats = {
        "fraction_numeric", "fraction_in_numeric_range", "numeric_min", "numeric_max",
        "numeric_mean",     "mean_length",               "distinct_ratio",
    };
    return stats;
}

Comparator comparator_from_name(const std::string& name) {
    if (name == "<") return Comparator::Less;
    if (name == "<=") return Comparator::LessEq;
    if (name == "=") return Comparator::Eq;
    if (name == ">=") return Comparator::GreaterEq;
    if (name == ">") return Comparator::Greater;
    throw Error("params.constraints: unknown comparator '" + name + "'");
}

void reject_unknown_keys(const ordered_json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok) throw Error(where + ": unknown field '" + it.key() + "'");
    }
}

double require_fraction(const ordered_json& obj, const char* key, double fallback,
                        const std::string& where) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw Error(where + "." + key + ": must be a number");
    double v = obj[key].get<double>();
    if (!(v > 0.0 && v <= 1.0)) throw Error(where + "." + key + ": must be in (0, 1]");
    return v;
}

bool keyword_less_ci(const std::string& a, const std::string& b) {
    std::string fa = ascii_lower(a), fb = ascii_lower(b);
    if (fa != fb) return fa < fb;
    return a < b;
}

} // namespace

std::vector<std::string> canonical_keywords(std::vector<std::string> keywords) {
    std::sort(keywords.begin(), keywords.end(), keyword_less_ci);
    return keywords;
}

namespace {

KeywordParams parse_keyword_params(const ordered_json& p) {
    reject_unknown_keys(p, {"keywords", "match_mode", "case_sensitive", "min_fraction"}, "params");
    KeywordParams kp;
    if (!p.contains("keywords") || !p["keywords"].is_array() || p["keywords"].empty())
        throw Error("params.keywords: required non-empty array");
    for (const auto& k : p["keywords"]) {
        if (!k.is_string() || k.get<std::string>().empty())
            throw Error("params.keywords: entries must be non-empty strings");
        kp.keywords.push_back(k.get<std::string>());
    }
    if (p.contains("match_mode")) {
        std::string mode = p["match_mode"].is_string() ? p["match_mode"].get<std::string>() : "";
        if (mode == "substring") kp.match_mode = MatchMode::Substring;
        else if (mode == "token") kp.match_mode = MatchMode::Token;
        else throw Error("params.match_mode: must be 'substring' or 'token'");
    }
    if (p.contains("case_sensitive")) {
        if (!p["case_sensitive"].is_boolean()) throw Error("params.case_sensitive: must be boolean");
        kp.case_sensitive = p["case_sensitive"].get<bool>();
    }
    kp.min_fraction = require_fraction(p, "min_fraction", 0.6, "params");
    return kp;
}

StatisticalParams parse_statistical_params(const ordered_json& p) {
    reject_unknown_keys(p, {"constraints"}, "params");
    StatisticalParams sp;
    if (!p.contains("constraints") || !p["constraints"].is_array() || p["constraints"].empty())
        throw Error("params.constraints: required non-empty array");
    for (const auto& jc : p["constraints"]) {
        if (!jc.is_object()) throw Error("params.constraints: entries must be objects");
        reject_unknown_keys(jc, {"stat", "comparator", "value", "range"}, "params.constraints");
        AggregateConstraint c;
        if (!jc.contains("stat") || !jc["stat"].is_string())
            throw Error("params.constraints.stat: required string");
        c.stat = jc["stat"].get<std::string>();
        if (!is_known_stat(c.stat))
            throw Error("params.constraints.stat: unknown statistic '" + c.stat + "'");
        if (!jc.contains("comparator") || !jc["comparator"].is_string())
            throw Error("params.constraints.comparator: required string");
        c.comparator = comparator_from_name(jc["comparator"].get<std::string>());
        if (!jc.contains("value") || !jc["value"].is_number())
            throw Error("params.constraints.value: required number");
        c.value = jc["value"].get<double>();
        bool needs_range = c.stat == "fraction_in_numeric_range";
        if (needs_range) {
            if (!jc.contains("range") || !jc["range"].is_array() || jc["range"].size() != 2 ||
                !jc["range"][0].is_number() || !jc["range"][1].is_number())
                throw Error("params.constraints.range: required [lo, hi] for fraction_in_numeric_range");
            double lo = jc["range"][0].get<double>();
            double hi = jc["range"][1].get<double>();
            if (lo > hi) throw Error("params.constraints.range: lo must be <= hi");
            c.range = {lo, hi};
        } else if (jc.contains("range")) {
            throw Error("params.constraints.range: only valid for fraction_in_numeric_range");
        }
        sp.constraints.push_back(std::move(c));
    }
    return sp;
}

RegexParams parse_regex_params(const ordered_json& p) {
    reject_unknown_keys(p, {"pattern", "full_match", "min_fraction"}, "params");
    RegexParams rp;
    if (!p.contains("pattern") || !p["pattern"].is_string())
        throw Error("params.pattern: required string");
    rp.pattern = p["pattern"].get<std::string>();
    rp.compiled = std::make_shared<const RegexLite>(RegexLite::compile(rp.pattern));
    if (p.contains("full_match")) {
        if (!p["full_match"].is_boolean()) throw Error("params.full_match: must be boolean");
        rp.full_match = p["full_match"].get<bool>();
    }
    rp.min_fraction = require_fraction(p, "min_fraction", 0.6, "params");
    return rp;
}

LfProvenance parse_provenance(const ordered_json& rec) {
    LfProvenance prov;
    if (!rec.contains("provenance")) return prov;
    const auto& jp = rec["provenance"];
    if (!jp.is_object()) throw Error("provenance: must be an object");
    reject_unknown_keys(jp, {"source", "backend_name", "prompt_hash"}, "provenance");
    if (jp.contains("source")) {
        std::string s = jp["source"].is_string() ? jp["source"].get<std::string>() : "";
        if (s != "manual" && s != "llm") throw Error("provenance.source: must be 'manual' or 'llm'");
        prov.source = s;
    }
    if (jp.contains("backend_name")) {
        if (!jp["backend_name"].is_string()) throw Error("provenance.backend_name: must be string");
        prov.backend_name = jp["backend_name"].get<std::string>();
    }
    if (jp.contains("prompt_hash")) {
        if (!jp["prompt_hash"].is_string()) throw Error("provenance.prompt_hash: must be string");
        prov.prompt_hash = jp["prompt_hash"].get<std::string>();
    }
    return prov;
}

} // namespace

bool is_known_stat(const std::string& name) { return known_stats().count(name) > 0; }

LabelingFunction parse_lf_json(const ordered_json& record, const LabelVocabulary& vocabulary) {
    if (!record.is_object()) throw Error("LF record must be a JSON object");
    reject_unknown_keys(record, {"id", "kind", "target_label", "params", "provenance"}, "record");

    LabelingFunction lf;
    if (!record.contains("id") || !record["id"].is_string())
        throw Error("id: required string");
    lf.id = record["id"].get<std::string>();
    if (lf.id.empty()) throw Error("id: must be non-empty");
    for (char c : lf.id)
        if (static_cast<unsigned char>(c) <= ' ')
            throw Error("id: must not contain whitespace or control characters");

    if (!record.contains("target_label") || !record["target_label"].is_string())
        throw Error("target_label: required string");
    std::string target = record["target_label"].get<std::string>();
    auto idx = vocabulary.index_of(target);
    if (!idx) throw Error("target_label: unknown label '" + target + "'");
    lf.target_label = *idx;

    if (!record.contains("kind") || !record["kind"].is_string())
        throw Error("kind: required string");
    std::string kind = record["kind"].get<std::string>();
    if (!record.contains("params") || !record["params"].is_object())
        throw Error("params: required object");
    const auto& p = record["params"];
    if (kind == "keyword") lf.params = parse_keyword_params(p);
    else if (kind == "statistical") lf.params = parse_statistical_params(p);
    else if (kind == "regex") lf.params = parse_regex_params(p);
    else throw Error("kind: must be one of 'keyword', 'statistical', 'regex'");

    lf.provenance = parse_provenance(record);
    return lf;
}

LabelingFunction parse_lf(const std::string& text, const LabelVocabulary& vocabulary) {
    ordered_json rec;
    try {
        rec = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed LF record: ") + e.what());
    }
    return parse_lf_json(rec, vocabulary);
}

ordered_json lf_to_json(const LabelingFunction& lf, const LabelVocabulary& vocabulary) {
    ordered_json rec;
    rec["id"] = lf.id;
    rec["kind"] = lf_kind_name(lf.kind());
    rec["target_label"] = vocabulary.name(lf.target_label);
    ordered_json p;
    switch (lf.kind()) {
        case LfKind::Keyword: {
            const auto& kp = std::get<KeywordParams>(lf.params);
            p["keywords"] = canonical_keywords(kp.keywords);
            p["match_mode"] = kp.match_mode == MatchMode::Substring ? "substring" : "token";
            p["case_sensitive"] = kp.case_sensitive;
            p["min_fraction"] = kp.min_fraction;
            break;
        }
        case LfKind::Statistical: {
            const auto& sp = std::get<StatisticalParams>(lf.params);
            p["constraints"] = ordered_json::array();
            for (const auto& c : sp.constraints) {
                ordered_json jc;
                jc["stat"] = c.stat;
                jc["comparator"] = comparator_name(c.comparator);
                jc["value"] = c.value;
                if (c.range) jc["range"] = ordered_json::array({c.range->first, c.range->second});
                p["constraints"].push_back(std::move(jc));
            }
            break;
        }
        case LfKind::Regex: {
            const auto& rp = std::get<RegexParams>(lf.params);
            p["pattern"] = rp.pattern;
            p["full_match"] = rp.full_match;
            p["min_fraction"] = rp.min_fraction;
            break;
        }
    }
    rec["params"] = std::move(p);
    ordered_json prov;
    prov["source"] = lf.provenance.source;
    if (lf.provenance.backend_name) prov["backend_name"] = *lf.provenance.backend_name;
    if (lf.provenance.prompt_hash) prov["prompt_hash"] = *lf.provenance.prompt_hash;
    rec["provenance"] = std::move(prov);
    return rec;
}

std::string serialize_lf(const LabelingFunction& lf, const LabelVocabulary& vocabulary) {
    return lf_to_json(lf, vocabulary).dump();
}

std::string lf_set_to_json(const std::vector<LabelingFunction>& lfs, const LabelVocabulary& vocabulary) {
    ordered_json arr = ordered_json::array();
    for (const auto& lf : lfs) arr.push_back(lf_to_json(lf, vocabulary));
    return arr.dump(2) + "\n";
}

std::vector<LabelingFunction> lf_set_from_json_text(const std::string& text,
                                                    const LabelVocabulary& vocabulary) {
    ordered_json arr;
    try {
        arr = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed LF file: ") + e.what());
    }
    if (!arr.is_array()) throw Error("LF file must be a JSON array of records");
    std::vector<LabelingFunction> lfs;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        try {
            lfs.push_back(parse_lf_json(arr[i], vocabulary));
        } catch (const Error& e) {
            throw Error("LF record " + std::to_string(i) + ": " + e.what());
        }
    }
    return lfs;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

bool keyword_matches_cell(const KeywordParams& kp, const std::string& cell) {
    if (kp.match_mode == MatchMode::Substring) {
        for (const auto& kw : kp.keywords) {
            if (kp.case_sensitive ? cell.find(kw) != std::string::npos : contains_ci(cell, kw))
                return true;
        }
        return false;
    }
    auto tokens = tokenize(cell);
    for (const auto& kw : kp.keywords) {
        for (const auto& tok : tokens) {
            if (kp.case_sensitive ? tok == kw : ascii_lower(tok) == ascii_lower(kw)) return true;
        }
    }
    return false;
}

bool fraction_reaches(std::size_t hits, std::size_t total, double min_fraction) {
    // Inclusive threshold.
    return static_cast<double>(hits) >= min_fraction * static_cast<double>(total) -
                                            1e-12 * static_cast<double>(total);
}

std::optional<double> stat_value(const AggregateStats& stats, const AggregateConstraint& c) {
    if (!stats.defined) return std::nullopt;
    if (c.stat == "fraction_numeric") return stats.fraction_numeric;
    if (c.stat == "mean_length") return stats.mean_length;
    if (c.stat == "distinct_ratio") return stats.distinct_ratio;
    if (c.stat == "fraction_in_numeric_range")
        return stats.fraction_in_numeric_range(c.range->first, c.range->second);
    if (!stats.has_numeric) return std::nullopt;
    if (c.stat == "numeric_min") return stats.numeric_min;
    if (c.stat == "numeric_max") return stats.numeric_max;
    if (c.stat == "numeric_mean") return stats.numeric_mean;
    return std::nullopt;
}

bool compare(double lhs, Comparator cmp, double rhs) {
    switch (cmp) {
        case Comparator::Less: return lhs < rhs;
        case Comparator::LessEq: return lhs <= rhs;
        case Comparator::Eq: return lhs == rhs;
        case Comparator::GreaterEq: return lhs >= rhs;
        case Comparator::Greater: return lhs > rhs;
    }
    return false;
}

} // namespace

int apply_lf(const LabelingFunction& lf, const std::vector<std::string>& values) {
    if (values.empty()) return kAbstain;
    switch (lf.kind()) {
        case LfKind::Keyword: {
            const auto& kp = std::get<KeywordParams>(lf.params);
            std::size_t hits = 0;
            for (const auto& cell : values)
                if (keyword_matches_cell(kp, cell)) ++hits;
            return fraction_reaches(hits, values.size(), kp.min_fraction) ? lf.target_label : kAbstain;
        }
        case LfKind::Statistical: {
            const auto& sp = std::get<StatisticalParams>(lf.params);
            ColumnInstance tmp;
            tmp.values = values;
            AggregateStats stats = column_aggregates(tmp);
            for (const auto& c : sp.constraints) {
                auto v = stat_value(stats, c);
                if (!v || !compare(*v, c.comparator, c.value)) return kAbstain;
            }
            return lf.target_label;
        }
        case LfKind::Regex: {
            const auto& rp = std::get<RegexParams>(lf.params);
            std::shared_ptr<const RegexLite> re = rp.compiled;
            if (!re) re = std::make_shared<const RegexLite>(RegexLite::compile(rp.pattern));
            std::size_t hits = 0;
            for (const auto& cell : values) {
                bool ok = rp.full_match ? re->match_full(cell) : re->search(cell);
                if (ok) ++hits;
            }
            return fraction_reaches(hits, values.size(), rp.min_fraction) ? lf.target_label : kAbstain;
        }
    }
    return kAbstain;
}

int apply_lf(const LabelingFunction& lf, const ColumnInstance& column) {
    return apply_lf(lf, column.values);
}

std::vector<std::vector<std::pair<int, int>>> LabelMatrix::rows() const {
    std::vector<std::vector<std::pair<int, int>>> out(n);
    for (const auto& v : votes)
        out[v.instance].emplace_back(static_cast<int>(v.lf), static_cast<int>(v.label));
    return out;
}

LabelMatrix apply_all(const std::vector<LabelingFunction>& lfs,
                      const std::vector<ColumnInstance>& columns) {
    std::unordered_set<std::string> ids;
    for (const auto& lf : lfs)
        if (!ids.insert(lf.id).second) throw Error("duplicate LF id '" + lf.id + "'");

    LabelMatrix matrix;
    matrix.n = columns.size();
    matrix.m = lfs.size();
    for (const auto& col : columns) matrix.instance_ids.push_back(col.column_id);
    for (const auto& lf : lfs) matrix.lf_ids.push_back(lf.id);

    for (std::size_t i = 0; i < columns.size(); ++i) {
        for (std::size_t j = 0; j < lfs.size(); ++j) {
            int vote = apply_lf(lfs[j], columns[i]);
            if (vote != kAbstain)
                matrix.votes.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                        static_cast<std::uint32_t>(vote)});
        }
    }
    return matrix;
}

std::string matrix_to_text(const LabelMatrix& matrix) {
    std::vector<std::string> lines;
    lines.reserve(matrix.votes.size());
    for (const auto& v : matrix.votes)
        lines.push_back(std::to_string(v.instance) + " " + std::to_string(v.lf) + " " +
                        std::to_string(v.label));
    std::sort(lines.begin(), lines.end());
    std::ostringstream out;
    out << matrix.n << " " << matrix.m << "\n";
    for (const auto& l : lines) out << l << "\n";
    return out.str();
}

LabelMatrix matrix_from_text(const std::string& text) {
    std::istringstream in(text);
    LabelMatrix matrix;
    std::string line;
    if (!std::getline(in, line)) throw Error("matrix file: missing header");
    {
        std::istringstream hs(line);
        if (!(hs >> matrix.n >> matrix.m)) throw Error("matrix file: malformed header '" + line + "'");
    }
    std::size_t lineno = 1;
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::istringstream ls(line);
        std::uint64_t i = 0, j = 0, y = 0;
        if (!(ls >> i >> j >> y))
            throw Error("matrix file line " + std::to_string(lineno) + ": malformed vote");
        if (i >= matrix.n || j >= matrix.m)
            throw Error("matrix file line " + std::to_string(lineno) + ": vote out of bounds");
        if (!seen.insert({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)}).second)
            throw Error("matrix file line " + std::to_string(lineno) + ": duplicate (instance, lf)");
        matrix.votes.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                static_cast<std::uint32_t>(y)});
    }
    std::sort(matrix.votes.begin(), matrix.votes.end(), [](const auto& a, const auto& b) {
        return a.instance != b.instance ? a.instance < b.instance : a.lf < b.lf;
    });
    return matrix;
}

std::vector<LfStats> lf_stats(const LabelMatrix& matrix, const std::optional<std::vector<int>>& gold) {
    if (gold && gold->size() != matrix.n)
        throw Error("gold labels misaligned: expected " + std::to_string(matrix.n) + " entries, got " +
                    std::to_string(gold->size()));

    std::vector<LfStats> stats(matrix.m);
    for (std::size_t j = 0; j < matrix.m; ++j)
        stats[j].lf_id = j < matrix.lf_ids.size() ? matrix.lf_ids[j] : std::to_string(j);

    std::vector<std::size_t> overlapped(matrix.m, 0), conflicted(matrix.m, 0);
    auto rows = matrix.rows();
    for (std::size_t i = 0; i < matrix.n; ++i) {
        const auto& row = rows[i];
        for (const auto& [j, y] : row) {
            auto& s = stats[static_cast<std::size_t>(j)];
            s.votes += 1;
            bool any_other = false, any_diff = false;
            for (const auto& [j2, y2] : row) {
                if (j2 == j) continue;
                any_other = true;
                if (y2 != y) any_diff = true;
            }
            if (any_other) overlapped[static_cast<std::size_t>(j)] += 1;
            if (any_diff) conflicted[static_cast<std::size_t>(j)] += 1;
            if (gold && (*gold)[i] != kAbstain && (*gold)[i] == y) s.correct += 1;
        }
    }
    for (std::size_t j = 0; j < matrix.m; ++j) {
        auto& s = stats[j];
        s.coverage = matrix.n == 0 ? 0.0 : static_cast<double>(s.votes) / static_cast<double>(matrix.n);
        s.overlap = s.votes == 0 ? 0.0 : static_cast<double>(overlapped[j]) / static_cast<double>(s.votes);
        s.conflict = s.votes == 0 ? 0.0 : static_cast<double>(conflicted[j]) / static_cast<double>(s.votes);
        if (gold && s.votes > 0)
            s.empirical_accuracy = static_cast<double>(s.correct) / static_cast<double>(s.votes);
    }
    return stats;
}

} // namespace lakelabel
