#include "lakelabel/lf_gen.hpp"

#include "lakelabel/http_util.hpp"
#include "lakelabel/parallel.hpp"
#include "lakelabel/text.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

namespace lakelabel {

using ordered_json = nlohmann::ordered_json;

namespace {

const char* kPlaceholders[] = {"{demonstrations}", "{lf_template}", "{question}", "{seed_values}",
                               "{seed_label}"};

constexpr const char* kValuesMarker = "Column values: ";
constexpr const char* kLabelMarker = "Semantic type: ";
constexpr const char* kKindMarker = "LF kind requested: ";

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

std::string replace_once(std::string text, const std::string& token, const std::string& value) {
    auto pos = text.find(token);
    if (pos == std::string::npos) throw Error("prompt template is missing placeholder " + token);
    text.replace(pos, token.size(), value);
    return text;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::string sanitize_id(const std::string& name) {
    std::string out;
    for (char c : name) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
        out.push_back(ok ? c : '_');
    }
    return out.empty() ? std::string("x") : out;
}

const std::string& lf_template_text(LfKind kind) {
    static const std::string keyword =
        std::string(kKindMarker) + "keyword\n"
        "Record template: {\"id\": \"<unique-id>\", \"kind\": \"keyword\", "
        "\"target_label\": \"<semantic-type>\", \"params\": {\"keywords\": [\"<keyword>\", \"...\"], "
        "\"match_mode\": \"substring\", \"case_sensitive\": false, \"min_fraction\": 0.6}, "
        "\"provenance\": {\"source\": \"llm\"}}";
    static const std::string statistical =
        std::string(kKindMarker) + "statistical\n"
        "Record template: {\"id\": \"<unique-id>\", \"kind\": \"statistical\", "
        "\"target_label\": \"<semantic-type>\", \"params\": {\"constraints\": [{\"stat\": "
        "\"fraction_in_numeric_range\", \"comparator\": \">=\", \"value\": 0.6, \"range\": [0, 100]}]}, "
        "\"provenance\": {\"source\": \"llm\"}}\n"
        "Available statistics: fraction_numeric, fraction_in_numeric_range (requires \"range\"), "
        "numeric_min, numeric_max, numeric_mean, mean_length, distinct_ratio. "
        "Comparators: < <= = >= >.";
    static const std::string regex =
        std::string(kKindMarker) + "regex\n"
        "Record template: {\"id\": \"<unique-id>\", \"kind\": \"regex\", "
        "\"target_label\": \"<semantic-type>\", \"params\": {\"pattern\": \"<pattern>\", "
        "\"full_match\": true, \"min_fraction\": 0.6}, \"provenance\": {\"source\": \"llm\"}}\n"
        "Patterns may use literals, character classes, '.', '*', '+', '?', repetition bounds, "
        "alternation, grouping and anchors; no backreferences or lookaround.";
    switch (kind) {
        case LfKind::Keyword: return keyword;
        case LfKind::Statistical: return statistical;
        case LfKind::Regex: return regex;
    }
    throw Error("invalid LF kind");
}

} // namespace

// ---------------------------------------------------------------------------
// Templates and demonstrations

PromptTemplate PromptTemplate::defaults() {
    PromptTemplate t;
    t.system_text =
        "You write labeling functions for semantic column type detection over web table "
        "columns. A labeling function reads the cell values of one column and either votes "
        "for exactly one semantic type or abstains. Labeling functions are declarative JSON "
        "records, never executable code.";
    t.user_text =
        "{demonstrations}\n"
        "\n"
        "{lf_template}\n"
        "\n"
        "{question}\n" +
        std::string(kValuesMarker) + "{seed_values}\n" + std::string(kLabelMarker) + "{seed_label}\n";
    return t;
}

PromptTemplate PromptTemplate::from_file_text(const std::string& text) {
    const std::string sys_marker = "<<<system>>>";
    const std::string user_marker = "<<<user>>>";
    auto sys_pos = text.find(sys_marker);
    auto user_pos = text.find(user_marker);
    if (sys_pos == std::string::npos || user_pos == std::string::npos || user_pos < sys_pos)
        throw Error("prompt template file needs a <<<system>>> section followed by <<<user>>>");
    PromptTemplate t;
    t.system_text = std::string(trim(text.substr(sys_pos + sys_marker.size(),
                                                 user_pos - sys_pos - sys_marker.size())));
    t.user_text = std::string(trim(text.substr(user_pos + user_marker.size())));
    t.user_text += "\n";
    t.validate();
    return t;
}

std::string PromptTemplate::to_file_text() const {
    return "<<<system>>>\n" + system_text + "\n<<<user>>>\n" + user_text;
}

void PromptTemplate::validate() const {
    for (const char* token : kPlaceholders) {
        std::size_t n = count_occurrences(user_text, token);
        if (n == 0) throw Error("prompt template is missing placeholder " + std::string(token));
        if (n > 1)
            throw Error("prompt template repeats placeholder " + std::string(token));
    }
}

const std::vector<Demonstration>& default_demonstrations() {
    static const std::vector<Demonstration> demos = {
        {"isbn",
         {"ISBN 0-553-57340-3", "ISBN 0-14-044913-6", "ISBN 0-7432-7356-7", "ISBN 0-452-28423-4",
          "ISBN 0-618-26030-0"},
         {R"({"id": "demo_isbn_keyword", "kind": "keyword", "target_label": "isbn", "params": {"keywords": ["ISBN"], "match_mode": "substring", "case_sensitive": false, "min_fraction": 0.8}, "provenance": {"source": "manual"}})"}},
        {"year",
         {"1999", "2004", "1875", "2010", "1923"},
         {R"({"id": "demo_year_statistical", "kind": "statistical", "target_label": "year", "params": {"constraints": [{"stat": "fraction_in_numeric_range", "comparator": ">=", "value": 0.9, "range": [1700, 2023]}]}, "provenance": {"source": "manual"}})"}},
        {"name",
         {"John Smith", "Mary", "Ada Lovelace", "Alan Turing", "Grace Hopper"},
         {R"({"id": "demo_name_regex", "kind": "regex", "target_label": "name", "params": {"pattern": "[A-Z][a-z]+( [A-Z][a-z]+)?", "full_match": true, "min_fraction": 0.6}, "provenance": {"source": "manual"}})"}},
        {"email",
         {"ada@example.com", "turing@lab.org", "hopper@navy.mil", "smith@mail.net", "mary@post.io"},
         {R"({"id": "demo_email_regex", "kind": "regex", "target_label": "email", "params": {"pattern": "[a-z0-9._]+@[a-z0-9.]+\\.[a-z]{2,3}", "full_match": true, "min_fraction": 0.8}, "provenance": {"source": "manual"}})"}},
        {"price",
         {"$19.99", "$5.00", "$120.50", "$7.25", "$64.00"},
         {R"({"id": "demo_price_keyword", "kind": "keyword", "target_label": "price", "params": {"keywords": ["$"], "match_mode": "substring", "case_sensitive": false, "min_fraction": 0.9}, "provenance": {"source": "manual"}})",
          R"({"id": "demo_price_statistical", "kind": "statistical", "target_label": "price", "params": {"constraints": [{"stat": "fraction_numeric", "comparator": "<", "value": 0.5}, {"stat": "mean_length", "comparator": "<=", "value": 12}]}, "provenance": {"source": "manual"}})"}},
    };
    return demos;
}

// ---------------------------------------------------------------------------
// Prompt building

std::string prompt_hash(const std::string& system_text, const std::string& user_text) {
    std::uint64_t h = fnv1a64(system_text);
    h = fnv1a64(std::string(1, '\x1f'), h);
    h = fnv1a64(user_text, h);
    return to_hex(h);
}

Prompt build_prompt(const SeedGroup& group, const LabelVocabulary& vocabulary,
                    const std::vector<Demonstration>& demos, const GenerationConfig& cfg,
                    LfKind kind, const PromptTemplate& tmpl) {
    tmpl.validate();
    if (group.columns.empty()) throw Error("seed group has no sampled columns");
    if (cfg.shots > demos.size())
        throw Error("shots=" + std::to_string(cfg.shots) + " exceeds available demonstrations (" +
                    std::to_string(demos.size()) + ")");
    if (cfg.delimiter.empty()) throw Error("delimiter must be non-empty");

    std::string demo_block;
    for (std::size_t k = 0; k < cfg.shots; ++k) {
        const auto& d = demos[k];
        if (k) demo_block += "\n\n";
        demo_block += "Example " + std::to_string(k + 1) + ":\n";
        demo_block += std::string(kValuesMarker) + join(d.values, cfg.delimiter) + "\n";
        demo_block += std::string(kLabelMarker) + d.label_name + "\n";
        demo_block += "Labeling functions:\n[" + join(d.example_lfs, ", ") + "]";
    }

    std::string question = "Write up to " + std::to_string(cfg.max_lfs_per_response) +
                           " labeling functions of the requested kind for the column below. "
                           "Return a JSON array of records and nothing else.";

    Prompt prompt;
    prompt.system_text = tmpl.system_text;
    prompt.user_text = tmpl.user_text;
    prompt.user_text = replace_once(prompt.user_text, "{demonstrations}", demo_block);
    prompt.user_text = replace_once(prompt.user_text, "{lf_template}", lf_template_text(kind));
    prompt.user_text = replace_once(prompt.user_text, "{question}", question);
    prompt.user_text =
        replace_once(prompt.user_text, "{seed_values}", join(group.columns.front().values, cfg.delimiter));
    prompt.user_text = replace_once(prompt.user_text, "{seed_label}", vocabulary.name(group.label));
    prompt.hash = prompt_hash(prompt.system_text, prompt.user_text);
    return prompt;
}

// ---------------------------------------------------------------------------
// Response parsing

namespace {

// Finds the end (one past the closing bracket) of the balanced JSON region
// opening at `start`, or npos when unbalanced.
std::size_t balanced_region_end(const std::string& text, std::size_t start) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '[' || c == '{') ++depth;
        else if (c == ']' || c == '}') {
            --depth;
            if (depth == 0) return i + 1;
            if (depth < 0) return std::string::npos;
        }
    }
    return std::string::npos;
}

} // namespace

ParseOutcome parse_llm_response(const std::string& text, const std::string& target_label_name,
                                const LabelVocabulary& vocabulary) {
    ParseOutcome outcome;
    std::size_t pos = 0;
    while (pos < text.size()) {
        char c = text[pos];
        if (c != '[' && c != '{') {
            ++pos;
            continue;
        }
        std::size_t end = balanced_region_end(text, pos);
        if (end == std::string::npos) {
            ++pos;
            continue;
        }
        ordered_json doc;
        bool parsed = false;
        try {
            doc = ordered_json::parse(text.substr(pos, end - pos));
            parsed = true;
        } catch (const nlohmann::json::exception&) {
            // Prose brackets; keep scanning inside the region.
        }
        if (!parsed) {
            ++pos;
            continue;
        }
        std::vector<ordered_json> records;
        if (doc.is_array()) {
            for (auto& el : doc) records.push_back(std::move(el));
        } else if (doc.is_object()) {
            records.push_back(std::move(doc));
        }
        for (auto& rec : records) {
            if (!rec.is_object()) {
                outcome.diagnostics.push_back("skipped non-object array element");
                continue;
            }
            if (!rec.contains("target_label")) rec["target_label"] = target_label_name;
            try {
                outcome.lfs.push_back(parse_lf_json(rec, vocabulary));
            } catch (const Error& e) {
                outcome.diagnostics.push_back(std::string("dropped record: ") + e.what());
            }
        }
        pos = end;
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// Mock generation

namespace {

std::string escape_regex_literal(char c) {
    static const std::string metas = "\\.[](){}*+?|^$";
    if (metas.find(c) != std::string::npos) return std::string("\\") + c;
    return std::string(1, c);
}

std::string shape_of(const std::string& cell) {
    std::string shape;
    for (char c : cell) {
        if (c >= '0' && c <= '9') shape.push_back('d');
        else if (c >= 'A' && c <= 'Z') shape.push_back('u');
        else if (c >= 'a' && c <= 'z') shape.push_back('l');
        else shape.push_back(c);
    }
    return shape;
}

std::string shape_to_pattern(const std::string& shape) {
    std::string pattern;
    std::size_t i = 0;
    while (i < shape.size()) {
        char c = shape[i];
        std::size_t run = 1;
        while (i + run < shape.size() && shape[i + run] == c) ++run;
        std::string atom;
        if (c == 'd') atom = "\\d";
        else if (c == 'u') atom = "[A-Z]";
        else if (c == 'l') atom = "[a-z]";
        else atom = escape_regex_literal(c);
        pattern += atom;
        if (run > 1) pattern += "{" + std::to_string(run) + "}";
        i += run;
    }
    return pattern;
}

std::optional<ordered_json> mock_keyword_record(const std::string& label,
                                                const std::vector<std::string>& values) {
    // Case-insensitive token frequencies; representative = smallest original.
    std::map<std::string, std::pair<std::size_t, std::string>> freq;
    for (const auto& cell : values) {
        for (const auto& tok : tokenize(cell)) {
            if (tok.size() < 3) continue;
            std::string folded = ascii_lower(tok);
            auto it = freq.find(folded);
            if (it == freq.end()) freq.emplace(folded, std::make_pair(std::size_t{1}, tok));
            else {
                it->second.first += 1;
                if (tok < it->second.second) it->second.second = tok;
            }
        }
    }
    if (freq.empty()) return std::nullopt;
    std::size_t best = 0;
    for (const auto& [folded, entry] : freq) best = std::max(best, entry.first);
    std::vector<std::string> keywords;
    for (const auto& [folded, entry] : freq)
        if (entry.first == best) keywords.push_back(entry.second);
    std::sort(keywords.begin(), keywords.end());
    if (keywords.size() > 3) keywords.resize(3);

    ordered_json rec;
    rec["id"] = "mock_" + sanitize_id(label) + "_keyword";
    rec["kind"] = "keyword";
    rec["target_label"] = label;
    rec["params"] = {{"keywords", keywords},
                     {"match_mode", "substring"},
                     {"case_sensitive", false},
                     {"min_fraction", 0.6}};
    rec["provenance"] = {{"source", "llm"}};
    return rec;
}

std::optional<ordered_json> mock_statistical_record(const std::string& label,
                                                    const std::vector<std::string>& values) {
    std::vector<double> nums;
    for (const auto& cell : values)
        if (auto v = parse_numeric(cell)) nums.push_back(*v);
    if (nums.empty() ||
        static_cast<double>(nums.size()) < 0.9 * static_cast<double>(values.size()))
        return std::nullopt;
    double lo = *std::min_element(nums.begin(), nums.end());
    double hi = *std::max_element(nums.begin(), nums.end());
    ordered_json rec;
    rec["id"] = "mock_" + sanitize_id(label) + "_statistical";
    rec["kind"] = "statistical";
    rec["target_label"] = label;
    rec["params"] = {{"constraints", ordered_json::array({{{"stat", "fraction_in_numeric_range"},
                                                           {"comparator", ">="},
                                                           {"value", 0.6},
                                                           {"range", {lo, hi}}}})}};
    rec["provenance"] = {{"source", "llm"}};
    return rec;
}

std::optional<ordered_json> mock_regex_record(const std::string& label,
                                              const std::vector<std::string>& values) {
    if (values.empty()) return std::nullopt;
    std::map<std::string, std::size_t> shapes;
    for (const auto& cell : values) shapes[shape_of(cell)] += 1;
    std::size_t best = 0;
    for (const auto& [shape, count] : shapes) best = std::max(best, count);
    std::string majority;
    for (const auto& [shape, count] : shapes) {
        if (count == best) {
            majority = shape;
            break; // std::map iterates keys ascending; first hit is smallest
        }
    }
    if (majority.empty()) return std::nullopt;
    ordered_json rec;
    rec["id"] = "mock_" + sanitize_id(label) + "_regex";
    rec["kind"] = "regex";
    rec["target_label"] = label;
    rec["params"] = {{"pattern", shape_to_pattern(majority)},
                     {"full_match", true},
                     {"min_fraction", 0.6}};
    rec["provenance"] = {{"source", "llm"}};
    return rec;
}

} // namespace

std::string mock_generate(const std::string& label_name, const std::vector<std::string>& values,
                          const std::vector<LfKind>& kinds) {
    std::vector<ordered_json> records;
    for (LfKind kind : {LfKind::Keyword, LfKind::Statistical, LfKind::Regex}) {
        if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) continue;
        std::optional<ordered_json> rec;
        switch (kind) {
            case LfKind::Keyword: rec = mock_keyword_record(label_name, values); break;
            case LfKind::Statistical: rec = mock_statistical_record(label_name, values); break;
            case LfKind::Regex: rec = mock_regex_record(label_name, values); break;
        }
        if (rec) records.push_back(std::move(*rec));
    }
    std::ostringstream out;
    out << "Here are labeling functions for semantic type \"" << label_name << "\".\n[";
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i) out << ",";
        out << "\n  " << records[i].dump();
    }
    out << (records.empty() ? "]" : "\n]") << "\nEach record follows the requested template.\n";
    return out.str();
}

std::string mock_generate(const SeedGroup& group, const LabelVocabulary& vocabulary) {
    if (group.columns.empty()) throw Error("seed group has no sampled columns");
    return mock_generate(vocabulary.name(group.label), group.columns.front().values,
                         {LfKind::Keyword, LfKind::Statistical, LfKind::Regex});
}

// ---------------------------------------------------------------------------
// Backends

BackendResult MockBackend::complete(const BackendRequest& request) {
    auto lines = split_lines(request.user_text);
    std::string label;
    std::string values_line;
    std::vector<LfKind> kinds;
    for (const auto& line : lines) {
        if (line.rfind(kValuesMarker, 0) == 0) values_line = line.substr(std::string(kValuesMarker).size());
        else if (line.rfind(kLabelMarker, 0) == 0) label = std::string(trim(line.substr(std::string(kLabelMarker).size())));
        else if (line.rfind(kKindMarker, 0) == 0) {
            std::string k = std::string(trim(line.substr(std::string(kKindMarker).size())));
            if (k == "keyword") kinds.push_back(LfKind::Keyword);
            else if (k == "statistical") kinds.push_back(LfKind::Statistical);
            else if (k == "regex") kinds.push_back(LfKind::Regex);
        }
    }
    if (label.empty() || values_line.empty())
        return {"The prompt did not contain a recognizable column block.\n", 0};
    if (kinds.empty()) kinds = {LfKind::Keyword, LfKind::Statistical, LfKind::Regex};

    std::vector<std::string> values;
    std::size_t pos = 0;
    while (true) {
        auto next = values_line.find(delimiter_, pos);
        if (next == std::string::npos) {
            values.push_back(values_line.substr(pos));
            break;
        }
        values.push_back(values_line.substr(pos, next - pos));
        pos = next + delimiter_.size();
    }
    return {mock_generate(label, values, kinds), 0};
}

HttpBackend::HttpBackend(BackendConfig cfg) : name_(cfg.name.empty() ? "http" : cfg.name) {
    const char* env_endpoint = std::getenv("LAKELABEL_LLM_ENDPOINT");
    endpoint_ = env_endpoint && *env_endpoint ? env_endpoint : cfg.endpoint;
    if (endpoint_.empty())
        throw Error("http backend needs an endpoint (config or LAKELABEL_LLM_ENDPOINT)");
    model_ = cfg.model;
    const char* key = std::getenv("LAKELABEL_LLM_API_KEY");
    api_key_ = key ? key : "";
}

BackendResult HttpBackend::complete(const BackendRequest& request) {
    nlohmann::json body;
    if (!model_.empty()) body["model"] = model_;
    body["messages"] = {{{"role", "system"}, {"content", request.system_text}},
                        {{"role", "user"}, {"content", request.user_text}}};
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;

    std::vector<std::pair<std::string, std::string>> headers;
    if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);

    auto start = std::chrono::steady_clock::now();
    nlohmann::json resp = http_post_json(endpoint_, body, headers);
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    try {
        return {resp.at("choices").at(0).at("message").at("content").get<std::string>(),
                static_cast<long>(elapsed)};
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("backend response missing choices[0].message.content: ") + e.what());
    }
}

std::unique_ptr<LlmBackend> make_backend(const BackendConfig& cfg, const std::string& delimiter) {
    if (cfg.name == "mock" || cfg.name.empty()) return std::make_unique<MockBackend>(delimiter);
    return std::make_unique<HttpBackend>(cfg);
}

// ---------------------------------------------------------------------------
// Generation driver

std::string exchanges_to_jsonl(const std::vector<BackendExchange>& exchanges) {
    std::ostringstream out;
    for (const auto& ex : exchanges) {
        ordered_json line;
        line["label"] = ex.label_name;
        line["kind"] = ex.kind;
        line["prompt_hash"] = ex.prompt_hash;
        line["status"] = ex.status;
        line["retries"] = ex.retries;
        line["latency_ms"] = ex.latency_ms;
        line["request"] = {{"system_text", ex.request.system_text},
                           {"user_text", ex.request.user_text},
                           {"temperature", ex.request.temperature},
                           {"max_tokens", ex.request.max_tokens}};
        line["response"] = ex.response;
        line["error"] = ex.error.empty() ? ordered_json(nullptr) : ordered_json(ex.error);
        out << line.dump() << "\n";
    }
    return out.str();
}

GenerationResult generate_lfs(LlmBackend& backend, const SeedSet& seeds,
                              const LabelVocabulary& vocabulary,
                              const std::vector<Demonstration>& demos, const GenerationConfig& cfg,
                              const PromptTemplate& tmpl) {
    struct Task {
        std::size_t group = 0;
        LfKind kind = LfKind::Keyword;
    };
    std::vector<Task> tasks;
    for (std::size_t g = 0; g < seeds.groups.size(); ++g)
        for (LfKind kind : cfg.kinds_requested) tasks.push_back({g, kind});

    struct TaskResult {
        BackendExchange exchange;
        std::vector<LabelingFunction> lfs;
        std::vector<std::string> diagnostics;
    };
    std::vector<TaskResult> results(tasks.size());

    parallel_for(tasks.size(), cfg.max_in_flight, [&](std::size_t t) {
        const Task& task = tasks[t];
        const SeedGroup& group = seeds.groups[task.group];
        TaskResult& result = results[t];

        Prompt prompt = build_prompt(group, vocabulary, demos, cfg, task.kind, tmpl);
        auto& ex = result.exchange;
        ex.label_name = vocabulary.name(group.label);
        ex.kind = lf_kind_name(task.kind);
        ex.request = {prompt.system_text, prompt.user_text, cfg.temperature, cfg.max_tokens};
        ex.prompt_hash = prompt.hash;

        std::string last_error;
        for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
            try {
                BackendResult reply = backend.complete(ex.request);
                ex.response = reply.text;
                ex.latency_ms = reply.latency_ms;
                ex.retries = attempt;
                ex.status = "ok";
                last_error.clear();
                break;
            } catch (const std::exception& e) {
                last_error = e.what();
                ex.retries = attempt;
            }
        }
        if (!last_error.empty()) {
            ex.status = "error";
            ex.error = last_error;
            result.diagnostics.push_back("backend failure: " + last_error);
            return;
        }

        ParseOutcome parsed = parse_llm_response(ex.response, ex.label_name, vocabulary);
        result.diagnostics = std::move(parsed.diagnostics);
        if (parsed.lfs.size() > cfg.max_lfs_per_response) {
            result.diagnostics.push_back(
                "response exceeded max_lfs_per_response; truncated to " +
                std::to_string(cfg.max_lfs_per_response));
            parsed.lfs.resize(cfg.max_lfs_per_response);
        }
        result.lfs = std::move(parsed.lfs);
    });

    GenerationResult out;
    std::unordered_set<std::string> seen_bodies;
    std::unordered_set<std::string> used_ids;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        auto& result = results[t];
        out.exchanges.push_back(result.exchange);
        for (const auto& d : result.diagnostics)
            out.warnings.push_back("label=" + result.exchange.label_name + " kind=" +
                                   result.exchange.kind + ": " + d);
        for (auto& lf : result.lfs) {
            lf.provenance.source = "llm";
            lf.provenance.backend_name = backend.name();
            lf.provenance.prompt_hash = result.exchange.prompt_hash;

            ordered_json body = lf_to_json(lf, vocabulary);
            body.erase("provenance");
            if (!seen_bodies.insert(body.dump()).second) continue; // exact duplicate rule

            if (!used_ids.insert(lf.id).second) {
                int suffix = 2;
                std::string candidate;
                do {
                    candidate = lf.id + "_" + std::to_string(suffix++);
                } while (!used_ids.insert(candidate).second);
                out.warnings.push_back("renamed duplicate LF id '" + lf.id + "' to '" + candidate + "'");
                lf.id = candidate;
            }
            out.lfs.push_back(std::move(lf));
        }
    }
    if (out.lfs.empty()) throw Error("no labeling functions parsed from any seed group");
    return out;
}

} // namespace lakelabel
