#include "lakelabel/corpus.hpp"

#include "lakelabel/rng.hpp"
#include "lakelabel/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace lakelabel {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// LabelVocabulary

LabelVocabulary LabelVocabulary::from_names(const std::vector<std::string>& names) {
    LabelVocabulary vocab;
    for (const auto& n : names) vocab.add(n);
    return vocab;
}

int LabelVocabulary::add(const std::string& name) {
    std::string trimmed(trim(name));
    if (trimmed.empty()) throw Error("empty label name");
    std::string folded = ascii_lower(trimmed);
    auto it = folded_index_.find(folded);
    if (it != folded_index_.end()) {
        if (names_[static_cast<std::size_t>(it->second)] != trimmed)
            throw Error("label '" + trimmed + "' collides with '" +
                        names_[static_cast<std::size_t>(it->second)] + "' after case-folding");
        return it->second;
    }
    names_.push_back(trimmed);
    int idx = static_cast<int>(names_.size()) - 1;
    folded_index_.emplace(std::move(folded), idx);
    return idx;
}

std::optional<int> LabelVocabulary::index_of(const std::string& name) const {
    auto it = folded_index_.find(ascii_lower(std::string(trim(name))));
    if (it == folded_index_.end()) return std::nullopt;
    return it->second;
}

const std::string& LabelVocabulary::name(int index) const {
    if (index < 0 || index >= size()) throw Error("label index out of range: " + std::to_string(index));
    return names_[static_cast<std::size_t>(index)];
}

// ---------------------------------------------------------------------------
// Loading

CorpusFormat corpus_format_from_name(const std::string& name) {
    if (name == "jsonl") return CorpusFormat::Jsonl;
    if (name == "csv-dir") return CorpusFormat::CsvDir;
    throw Error("unknown corpus format: " + name);
}

std::string corpus_format_name(CorpusFormat format) {
    return format == CorpusFormat::Jsonl ? "jsonl" : "csv-dir";
}

namespace {

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return std::string(buf);
}

struct RawColumn {
    ColumnInstance column;
    std::optional<std::string> gold_name;
    std::size_t line = 0; // for error reporting
};

void check_known_keys(const ordered_json& obj, std::initializer_list<const char*> allowed,
                      std::size_t line) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok)
            throw Error("line " + std::to_string(line) + ": unknown field '" + it.key() + "'");
    }
}

std::vector<RawColumn> parse_jsonl_columns(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::vector<RawColumn> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        ordered_json rec;
        try {
            rec = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("line " + std::to_string(lineno) + ": malformed JSON: " + e.what());
        }
        if (!rec.is_object())
            throw Error("line " + std::to_string(lineno) + ": record is not an object");
        check_known_keys(rec, {"column_id", "table_id", "header", "values", "label"}, lineno);

        RawColumn raw;
        raw.line = lineno;
        auto require_string = [&](const char* key) -> std::string {
            if (!rec.contains(key) || !rec[key].is_string())
                throw Error("line " + std::to_string(lineno) + ": missing or non-string field '" +
                            key + "'");
            return rec[key].get<std::string>();
        };
        raw.column.column_id = require_string("column_id");
        raw.column.table_id = require_string("table_id");
        if (rec.contains("header") && !rec["header"].is_null()) {
            if (!rec["header"].is_string())
                throw Error("line " + std::to_string(lineno) + ": field 'header' must be string or null");
            raw.column.header = rec["header"].get<std::string>();
        }
        if (!rec.contains("values") || !rec["values"].is_array())
            throw Error("line " + std::to_string(lineno) + ": missing or non-array field 'values'");
        for (const auto& v : rec["values"]) {
            if (!v.is_string())
                throw Error("line " + std::to_string(lineno) + ": values must be strings");
            raw.column.values.push_back(v.get<std::string>());
        }
        if (rec.contains("label") && !rec["label"].is_null()) {
            if (!rec["label"].is_string())
                throw Error("line " + std::to_string(lineno) + ": field 'label' must be string or null");
            raw.gold_name = rec["label"].get<std::string>();
        }
        out.push_back(std::move(raw));
    }
    return out;
}

// Minimal RFC-4180 row reader: quotes, escaped quotes, embedded commas
// and newlines, CRLF tolerance.
std::vector<std::vector<std::string>> parse_csv(const std::string& text, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t i = 0;
    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&]() {
        end_field();
        rows.push_back(row);
        row.clear();
    };
    while (i < text.size()) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                } else {
                    in_quotes = false;
                    ++i;
                }
            } else {
                field.push_back(c);
                ++i;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field.empty() && !field_started) {
                    in_quotes = true;
                } else {
                    field.push_back('"');
                }
                field_started = true;
                ++i;
                break;
            case ',':
                end_field();
                ++i;
                break;
            case '\r':
                ++i;
                break;
            case '\n':
                end_row();
                ++i;
                break;
            default:
                field.push_back(c);
                field_started = true;
                ++i;
        }
    }
    if (in_quotes) throw Error("unterminated quote in CSV file: " + path);
    if (field_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

std::vector<RawColumn> parse_csv_dir_columns(const std::string& dir_path) {
    fs::path dir(dir_path);
    if (!fs::is_directory(dir)) throw Error("not a directory: " + dir_path);

    fs::path labels_file = dir / "labels.csv";
    if (!fs::exists(labels_file))
        throw Error("csv-dir corpus is missing sidecar labels file: " + labels_file.string());

    std::vector<fs::path> tables;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().extension() != ".csv") continue;
        if (entry.path().filename() == "labels.csv") continue;
        tables.push_back(entry.path());
    }
    std::sort(tables.begin(), tables.end());

    std::vector<RawColumn> out;
    std::unordered_map<std::string, std::unordered_map<std::size_t, std::size_t>> position;
    for (const auto& table_path : tables) {
        std::string table_id = table_path.stem().string();
        auto rows = parse_csv(read_text_file(table_path.string()), table_path.string());
        if (rows.empty()) continue;
        const auto& header_row = rows.front();
        std::size_t width = 0;
        for (const auto& r : rows) width = std::max(width, r.size());
        for (std::size_t c = 0; c < width; ++c) {
            RawColumn raw;
            raw.column.table_id = table_id;
            raw.column.column_id = table_id + ":" + std::to_string(c);
            if (c < header_row.size() && !header_row[c].empty()) raw.column.header = header_row[c];
            for (std::size_t r = 1; r < rows.size(); ++r)
                if (c < rows[r].size()) raw.column.values.push_back(rows[r][c]);
            position[table_id][c] = out.size();
            out.push_back(std::move(raw));
        }
    }

    // Sidecar rows: table_id,column_index,label
    auto label_rows = parse_csv(read_text_file(labels_file.string()), labels_file.string());
    std::set<std::pair<std::string, std::size_t>> seen;
    std::size_t lineno = 0;
    for (const auto& row : label_rows) {
        ++lineno;
        if (row.size() == 1 && trim(row[0]).empty()) continue;
        if (row.size() != 3)
            throw Error("labels.csv line " + std::to_string(lineno) +
                        ": expected table_id,column_index,label");
        const std::string& table_id = row[0];
        std::size_t col_idx = 0;
        try {
            col_idx = static_cast<std::size_t>(std::stoul(row[1]));
        } catch (const std::exception&) {
            throw Error("labels.csv line " + std::to_string(lineno) + ": bad column index '" +
                        row[1] + "'");
        }
        auto tit = position.find(table_id);
        if (tit == position.end() || !tit->second.count(col_idx))
            throw Error("labels.csv line " + std::to_string(lineno) + ": no such column " +
                        table_id + ":" + std::to_string(col_idx));
        if (!seen.insert({table_id, col_idx}).second)
            throw Error("labels.csv line " + std::to_string(lineno) + ": duplicate mapping for " +
                        table_id + ":" + std::to_string(col_idx));
        out[tit->second.at(col_idx)].gold_name = std::string(trim(row[2]));
        out[tit->second.at(col_idx)].line = lineno;
    }
    return out;
}

} // namespace

Dataset load_dataset(const std::string& path, CorpusFormat format,
                     const std::optional<std::string>& labels_path) {
    std::vector<RawColumn> raw = format == CorpusFormat::Jsonl ? parse_jsonl_columns(path)
                                                               : parse_csv_dir_columns(path);
    Dataset dataset;
    dataset.provenance.source_path = path;
    dataset.provenance.ingested_at = now_iso8601();

    bool declared = labels_path.has_value();
    if (declared)
        dataset.vocabulary = vocabulary_from_json_text(read_text_file(*labels_path));

    std::unordered_set<std::string> ids;
    for (auto& rc : raw) {
        if (!ids.insert(rc.column.column_id).second)
            throw Error("duplicate column_id '" + rc.column.column_id + "'");
        if (rc.gold_name) {
            if (declared) {
                auto idx = dataset.vocabulary.index_of(*rc.gold_name);
                if (!idx)
                    throw Error("line " + std::to_string(rc.line) + ": unknown label '" +
                                *rc.gold_name + "'");
                rc.column.gold_label = *idx;
            } else {
                rc.column.gold_label = dataset.vocabulary.add(*rc.gold_name);
            }
        }
        dataset.columns.push_back(std::move(rc.column));
    }
    if (dataset.vocabulary.size() == 0)
        throw Error("corpus declares no labels; pass a label vocabulary or label some columns");
    return dataset;
}

std::string dataset_to_jsonl(const Dataset& dataset) {
    std::ostringstream out;
    for (const auto& col : dataset.columns) {
        ordered_json rec;
        rec["column_id"] = col.column_id;
        rec["table_id"] = col.table_id;
        rec["header"] = col.header ? ordered_json(*col.header) : ordered_json(nullptr);
        rec["values"] = col.values;
        rec["label"] = col.gold_label ? ordered_json(dataset.vocabulary.name(*col.gold_label))
                                      : ordered_json(nullptr);
        out << rec.dump() << "\n";
    }
    return out.str();
}

void save_dataset_jsonl(const Dataset& dataset, const std::string& path) {
    write_text_file(path, dataset_to_jsonl(dataset));
}

std::string vocabulary_to_json(const LabelVocabulary& vocabulary) {
    ordered_json arr = vocabulary.names();
    return arr.dump(2) + "\n";
}

LabelVocabulary vocabulary_from_json_text(const std::string& text) {
    ordered_json arr;
    try {
        arr = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed vocabulary JSON: ") + e.what());
    }
    if (!arr.is_array()) throw Error("vocabulary file must be a JSON array of names");
    LabelVocabulary vocab;
    for (const auto& v : arr) {
        if (!v.is_string()) throw Error("vocabulary entries must be strings");
        vocab.add(v.get<std::string>());
    }
    return vocab;
}

// ---------------------------------------------------------------------------
// Aggregates

double AggregateStats::fraction_in_numeric_range(double lo, double hi) const {
    if (!defined || cell_count == 0) return 0.0;
    std::size_t hits = 0;
    for (double v : numeric_values)
        if (v >= lo && v <= hi) ++hits;
    return static_cast<double>(hits) / static_cast<double>(cell_count);
}

AggregateStats column_aggregates(const ColumnInstance& column) {
    AggregateStats stats;
    const auto& cells = column.values;
    if (cells.empty()) return stats; // all-undefined
    stats.defined = true;
    stats.cell_count = cells.size();

    double length_sum = 0.0;
    double numeric_sum = 0.0;
    std::set<std::string_view> distinct;
    for (const auto& cell : cells) {
        length_sum += static_cast<double>(cell.size());
        distinct.insert(cell);
        if (auto v = parse_numeric(cell)) {
            if (!stats.has_numeric) {
                stats.numeric_min = stats.numeric_max = *v;
                stats.has_numeric = true;
            } else {
                stats.numeric_min = std::min(stats.numeric_min, *v);
                stats.numeric_max = std::max(stats.numeric_max, *v);
            }
            numeric_sum += *v;
            stats.numeric_values.push_back(*v);
        }
    }
    const double n = static_cast<double>(cells.size());
    stats.fraction_numeric = static_cast<double>(stats.numeric_values.size()) / n;
    if (stats.has_numeric)
        stats.numeric_mean = numeric_sum / static_cast<double>(stats.numeric_values.size());
    stats.mean_length = length_sum / n;
    stats.distinct_ratio = static_cast<double>(distinct.size()) / n;
    return stats;
}

// ---------------------------------------------------------------------------
// Seeds

std::size_t SeedSet::instance_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.columns.size();
    return n;
}

SeedSet sample_seeds(const Dataset& dataset, std::size_t per_type_columns,
                     std::size_t values_per_column, std::uint64_t rng_seed) {
    if (per_type_columns < 1 || values_per_column < 1)
        throw Error("per_type_columns and values_per_column must be >= 1");

    SeedSet seeds;
    seeds.rng_seed = rng_seed;
    seeds.per_type_columns = per_type_columns;
    seeds.values_per_column = values_per_column;

    for (int label = 0; label < dataset.vocabulary.size(); ++label) {
        std::vector<std::size_t> candidates;
        for (std::size_t i = 0; i < dataset.columns.size(); ++i)
            if (dataset.columns[i].gold_label && *dataset.columns[i].gold_label == label)
                candidates.push_back(i);
        if (candidates.empty()) continue;

        SeedGroup group;
        group.label = label;
        group.rng_seed = splitmix64(rng_seed ^ splitmix64(static_cast<std::uint64_t>(label) + 1));
        Rng rng(group.rng_seed);

        auto picked = rng.sample_indices(candidates.size(), per_type_columns);
        for (std::size_t pos : picked) {
            const ColumnInstance& col = dataset.columns[candidates[pos]];
            SeedColumn sc;
            sc.column_id = col.column_id;
            auto value_idx = rng.sample_indices(col.values.size(), values_per_column);
            for (std::size_t vi : value_idx) sc.values.push_back(col.values[vi]);
            group.columns.push_back(std::move(sc));
        }
        seeds.groups.push_back(std::move(group));
    }
    if (seeds.groups.empty()) throw Error("no gold-labeled columns: cannot sample seeds");
    return seeds;
}

std::string seed_set_to_json(const SeedSet& seeds, const LabelVocabulary& vocabulary) {
    ordered_json doc;
    doc["rng_seed"] = seeds.rng_seed;
    doc["per_type_columns"] = seeds.per_type_columns;
    doc["values_per_column"] = seeds.values_per_column;
    doc["groups"] = ordered_json::array();
    for (const auto& g : seeds.groups) {
        ordered_json jg;
        jg["label"] = vocabulary.name(g.label);
        jg["rng_seed"] = g.rng_seed;
        jg["columns"] = ordered_json::array();
        for (const auto& c : g.columns) {
            ordered_json jc;
            jc["column_id"] = c.column_id;
            jc["values"] = c.values;
            jg["columns"].push_back(std::move(jc));
        }
        doc["groups"].push_back(std::move(jg));
    }
    return doc.dump(2) + "\n";
}

SeedSet seed_set_from_json_text(const std::string& text, const LabelVocabulary& vocabulary) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed seed file: ") + e.what());
    }
    SeedSet seeds;
    seeds.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
    seeds.per_type_columns = doc.at("per_type_columns").get<std::size_t>();
    seeds.values_per_column = doc.at("values_per_column").get<std::size_t>();
    for (const auto& jg : doc.at("groups")) {
        SeedGroup g;
        std::string label_name = jg.at("label").get<std::string>();
        auto idx = vocabulary.index_of(label_name);
        if (!idx) throw Error("seed file references unknown label '" + label_name + "'");
        g.label = *idx;
        g.rng_seed = jg.at("rng_seed").get<std::uint64_t>();
        for (const auto& jc : jg.at("columns")) {
            SeedColumn c;
            c.column_id = jc.at("column_id").get<std::string>();
            for (const auto& v : jc.at("values")) c.values.push_back(v.get<std::string>());
            g.columns.push_back(std::move(c));
        }
        seeds.groups.push_back(std::move(g));
    }
    return seeds;
}

} // namespace lakelabel
