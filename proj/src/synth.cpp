#include "lakelabel/pipeline.hpp"

#include "lakelabel/rng.hpp"

#include <cmath>

namespace lakelabel {

namespace {

const char* kWords[] = {"alpha",    "bravo",   "charlie", "delta",  "echo",   "foxtrot", "golf",
                        "hotel",    "india",   "juliett", "kilo",   "lima",   "mike",    "november",
                        "oscar",    "papa",    "quebec",  "romeo",  "sierra", "tango",   "uniform",
                        "victor",   "whiskey", "xray",    "yankee", "zulu"};
constexpr std::size_t kWordCount = sizeof(kWords) / sizeof(kWords[0]);

std::string word_for(std::size_t i) {
    std::string w = kWords[i % kWordCount];
    if (i >= kWordCount) w += std::to_string(i / kWordCount);
    return w;
}

std::string upper(std::string s) {
    for (char& c : s)
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    return s;
}

std::string random_lower(Rng& rng, std::size_t len) {
    std::string s;
    for (std::size_t i = 0; i < len; ++i)
        s.push_back(static_cast<char>('a' + rng.bounded(26)));
    return s;
}

std::string random_upper(Rng& rng, std::size_t len) {
    std::string s;
    for (std::size_t i = 0; i < len; ++i)
        s.push_back(static_cast<char>('A' + rng.bounded(26)));
    return s;
}

std::string random_digits(Rng& rng, std::size_t len) {
    std::string s;
    for (std::size_t i = 0; i < len; ++i)
        s.push_back(static_cast<char>('0' + rng.bounded(10)));
    return s;
}

enum class TypeKind { Keyword, Numeric, Shape };

struct TypePlan {
    std::string name;
    TypeKind kind = TypeKind::Keyword;
    std::string token;       // keyword types
    double numeric_base = 0; // numeric types; values in [base, base+3]
    std::size_t upper_run = 0, digit_run = 0, lower_run = 0; // shape types
};

std::vector<TypePlan> plan_types(std::size_t count) {
    std::vector<TypePlan> plans;
    std::size_t numeric_seen = 0, shape_seen = 0;
    for (std::size_t t = 0; t < count; ++t) {
        TypePlan plan;
        std::string word = word_for(t);
        switch (t % 3) {
            case 0:
                plan.kind = TypeKind::Keyword;
                plan.name = "kw_" + word;
                plan.token = upper(word);
                break;
            case 1: {
                plan.kind = TypeKind::Numeric;
                plan.name = "num_" + word;
                // Distinct digit counts keep shape-derived regexes type-specific.
                std::size_t digits = 4 + numeric_seen;
                plan.numeric_base = std::pow(10.0, static_cast<double>(digits - 1));
                ++numeric_seen;
                break;
            }
            case 2: {
                plan.kind = TypeKind::Shape;
                plan.name = "rx_" + word;
                plan.upper_run = 2 + shape_seen % 3;
                plan.digit_run = 3 + (shape_seen / 3) % 4;
                plan.lower_run = 2 + (shape_seen / 12) % 3;
                ++shape_seen;
                break;
            }
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

std::string clean_cell(const TypePlan& plan, Rng& rng) {
    switch (plan.kind) {
        case TypeKind::Keyword:
            return plan.token + " " + random_digits(rng, 4);
        case TypeKind::Numeric: {
            double v = plan.numeric_base + static_cast<double>(rng.bounded(4));
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.0f", v);
            return std::string(buf);
        }
        case TypeKind::Shape:
            return random_upper(rng, plan.upper_run) + "-" + random_digits(rng, plan.digit_run) +
                   "-" + random_lower(rng, plan.lower_run);
    }
    return {};
}

} // namespace

SynthOutput generate_synthetic(const SynthConfig& cfg) {
    if (cfg.types < 1) throw Error("synth: types must be >= 1");
    if (cfg.min_cells < 1 || cfg.max_cells < cfg.min_cells)
        throw Error("synth: bad cell-count range");
    if (cfg.noise < 0.0 || cfg.noise > 1.0) throw Error("synth: noise must be in [0, 1]");

    auto plans = plan_types(cfg.types);
    SynthOutput out;
    for (const auto& plan : plans) out.label_names.push_back(plan.name);
    for (const auto& extra : cfg.heldout_labels) out.label_names.push_back(extra);
    out.dataset.vocabulary = LabelVocabulary::from_names(out.label_names);
    out.dataset.provenance.source_path = "synthetic";

    for (std::size_t t = 0; t < plans.size(); ++t) {
        const auto& plan = plans[t];
        Rng rng = Rng::split(cfg.rng_seed, t);
        for (std::size_t c = 0; c < cfg.columns_per_type; ++c) {
            ColumnInstance col;
            col.column_id = plan.name + "_" + std::to_string(c);
            col.table_id = "synth_" + std::to_string((t * cfg.columns_per_type + c) / 8);
            col.gold_label = *out.dataset.vocabulary.index_of(plan.name);
            std::size_t cells =
                cfg.min_cells + rng.bounded(cfg.max_cells - cfg.min_cells + 1);
            for (std::size_t k = 0; k < cells; ++k) {
                if (rng.real01() < cfg.noise)
                    col.values.push_back(random_lower(rng, 5 + rng.bounded(6)));
                else
                    col.values.push_back(clean_cell(plan, rng));
            }
            out.dataset.columns.push_back(std::move(col));
        }
    }
    return out;
}

void write_synthetic(const SynthConfig& cfg, const std::string& corpus_path,
                     const std::string& labels_path) {
    SynthOutput out = generate_synthetic(cfg);
    save_dataset_jsonl(out.dataset, corpus_path);
    if (!labels_path.empty())
        write_text_file(labels_path, vocabulary_to_json(out.dataset.vocabulary));
}

} // namespace lakelabel
