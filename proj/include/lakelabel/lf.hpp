#pragma once

#include "lakelabel/common.hpp"
#include "lakelabel/corpus.hpp"
#include "lakelabel/regex_lite.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace lakelabel {

enum class LfKind { Keyword, Statistical, Regex };
enum class MatchMode { Substring, Token };
enum class Comparator { Less, LessEq, Eq, GreaterEq, Greater };

std::string lf_kind_name(LfKind kind);
std::string comparator_name(Comparator cmp);

// Case-insensitive sort with byte-order tie break; the canonical keyword
// order used by serialization and equality (keyword order is not
// semantic: matching is any-of).
std::vector<std::string> canonical_keywords(std::vector<std::string> keywords);

struct KeywordParams {
    std::vector<std::string> keywords;
    MatchMode match_mode = MatchMode::Substring;
    bool case_sensitive = false;
    double min_fraction = 0.6;

    bool operator==(const KeywordParams& o) const {
        return match_mode == o.match_mode && case_sensitive == o.case_sensitive &&
               min_fraction == o.min_fraction &&
               canonical_keywords(keywords) == canonical_keywords(o.keywords);
    }
};

// Names of the closed aggregate-statistic set (see AggregateStats).
bool is_known_stat(const std::string& name);

struct AggregateConstraint {
    std::string stat;
    Comparator comparator = Comparator::GreaterEq;
    double value = 0.0;
    std::optional<std::pair<double, double>> range; // only for fraction_in_numeric_range

    bool operator==(const AggregateConstraint&) const = default;
};

struct StatisticalParams {
    std::vector<AggregateConstraint> constraints; // conjunction

    bool operator==(const StatisticalParams&) const = default;
};

struct RegexParams {
    std::string pattern;
    bool full_match = false;
    double min_fraction = 0.6;

    // Compile cache; not part of the value.
    std::shared_ptr<const RegexLite> compiled;

    bool operator==(const RegexParams& o) const {
        return pattern == o.pattern && full_match == o.full_match && min_fraction == o.min_fraction;
    }
};

struct LfProvenance {
    std::string source = "manual"; // "manual" | "llm"
    std::optional<std::string> backend_name;
    std::optional<std::string> prompt_hash;

    bool operator==(const LfProvenance&) const = default;
};

using LfParams = std::variant<KeywordParams, StatisticalParams, RegexParams>;

struct LabelingFunction {
    std::string id;
    int target_label = -1;
    LfParams params;
    LfProvenance provenance;

    LfKind kind() const { return static_cast<LfKind>(params.index()); }

    bool operator==(const LabelingFunction&) const = default;
};

// ---------------------------------------------------------------------------
// DSL parsing / canonical serialization

LabelingFunction parse_lf_json(const nlohmann::ordered_json& record, const LabelVocabulary& vocabulary);
LabelingFunction parse_lf(const std::string& text, const LabelVocabulary& vocabulary);

nlohmann::ordered_json lf_to_json(const LabelingFunction& lf, const LabelVocabulary& vocabulary);
std::string serialize_lf(const LabelingFunction& lf, const LabelVocabulary& vocabulary);

std::string lf_set_to_json(const std::vector<LabelingFunction>& lfs, const LabelVocabulary& vocabulary);
std::vector<LabelingFunction> lf_set_from_json_text(const std::string& text, const LabelVocabulary& vocabulary);

// ---------------------------------------------------------------------------
// Execution

// Returns the LF's target label index, or kAbstain. Total and
// deterministic; the empty column abstains for every kind.
int apply_lf(const LabelingFunction& lf, const ColumnInstance& column);
int apply_lf(const LabelingFunction& lf, const std::vector<std::string>& values);

/// Sparse n-instances x m-LFs vote matrix; absent entries are abstains.
struct LabelMatrix {
    struct Vote {
        std::uint32_t instance = 0;
        std::uint32_t lf = 0;
        std::uint32_t label = 0;
    };

    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<Vote> votes; // sorted by (instance, lf); unique per pair
    std::vector<std::string> instance_ids;
    std::vector<std::string> lf_ids;

    // Per-instance (lf, label) pairs, aligned with instance order.
    std::vector<std::vector<std::pair<int, int>>> rows() const;
};

LabelMatrix apply_all(const std::vector<LabelingFunction>& lfs,
                      const std::vector<ColumnInstance>& columns);

// Bit-exact matrix file: header "n m", then one "instance lf label" line
// per vote, lines sorted lexicographically as strings.
std::string matrix_to_text(const LabelMatrix& matrix);
LabelMatrix matrix_from_text(const std::string& text);

struct LfStats {
    std::string lf_id;
    std::size_t votes = 0;
    std::size_t correct = 0;
    double coverage = 0.0;
    double overlap = 0.0;
    double conflict = 0.0;
    std::optional<double> empirical_accuracy;
};

// gold entries may be kAbstain for instances with unknown labels; those
// instances are skipped by the accuracy numerator/denominator.
std::vector<LfStats> lf_stats(const LabelMatrix& matrix,
                              const std::optional<std::vector<int>>& gold = std::nullopt);

} // namespace lakelabel
