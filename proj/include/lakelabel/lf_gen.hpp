#pragma once

#include "lakelabel/corpus.hpp"
#include "lakelabel/lf.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lakelabel {

/// Two-part prompt with the five substitution slots the builder fills.
struct PromptTemplate {
    std::string system_text;
    std::string user_text; // {demonstrations} {lf_template} {question} {seed_values} {seed_label}

    static PromptTemplate defaults();
    // Plain-text file with "<<<system>>>" and "<<<user>>>" section markers.
    static PromptTemplate from_file_text(const std::string& text);
    std::string to_file_text() const;

    // Each placeholder must appear exactly once in user_text.
    void validate() const;
};

/// Hand-written few-shot example: one column plus the LFs a person wrote
/// for it, serialized in the DSL.
struct Demonstration {
    std::string label_name;
    std::vector<std::string> values;
    std::vector<std::string> example_lfs;
};

// Bundled defaults: five semantic types covering all three LF kinds.
const std::vector<Demonstration>& default_demonstrations();

struct BackendConfig {
    std::string name = "mock"; // "mock" | "http"
    std::string endpoint;      // http backend; LAKELABEL_LLM_ENDPOINT overrides
    std::string model;
};

struct GenerationConfig {
    std::vector<LfKind> kinds_requested = {LfKind::Keyword, LfKind::Statistical, LfKind::Regex};
    std::size_t shots = 2;
    std::string delimiter = " ||| ";
    std::size_t max_lfs_per_response = 8;
    BackendConfig backend;
    double temperature = 0.0;
    std::size_t max_tokens = 1024;
    int max_retries = 2;
    std::size_t max_in_flight = 4;
};

struct BackendRequest {
    std::string system_text;
    std::string user_text;
    double temperature = 0.0;
    std::size_t max_tokens = 1024;
};

struct BackendResult {
    std::string text;
    long latency_ms = 0;
};

/// Verbatim audit record of one backend call.
struct BackendExchange {
    std::string label_name;
    std::string kind;
    BackendRequest request;
    std::string response;
    std::string status = "ok"; // "ok" | "error"
    std::string error;
    long latency_ms = 0;
    int retries = 0;
    std::string prompt_hash;
};

std::string exchanges_to_jsonl(const std::vector<BackendExchange>& exchanges);

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string name() const = 0;
    virtual BackendResult complete(const BackendRequest& request) = 0;
};

// Deterministic test double. Recovers the seed label, values and requested
// kind from the default-template marker lines ("Semantic type:",
// "Column values:", "LF kind requested:") and replies with mock_generate
// output filtered to the requested kinds.
class MockBackend : public LlmBackend {
public:
    explicit MockBackend(std::string delimiter = " ||| ") : delimiter_(std::move(delimiter)) {}
    std::string name() const override { return "mock"; }
    BackendResult complete(const BackendRequest& request) override;

private:
    std::string delimiter_;
};

// Chat-style HTTP backend (OpenAI-compatible request shape). Endpoint from
// LAKELABEL_LLM_ENDPOINT or config; bearer token from LAKELABEL_LLM_API_KEY.
class HttpBackend : public LlmBackend {
public:
    explicit HttpBackend(BackendConfig cfg);
    std::string name() const override { return name_; }
    BackendResult complete(const BackendRequest& request) override;

private:
    std::string name_;
    std::string endpoint_;
    std::string model_;
    std::string api_key_;
};

std::unique_ptr<LlmBackend> make_backend(const BackendConfig& cfg, const std::string& delimiter);

struct Prompt {
    std::string system_text;
    std::string user_text;
    std::string hash; // stable hash of (system_text, user_text)
};

std::string prompt_hash(const std::string& system_text, const std::string& user_text);

// Fills the template for one (seed group, kind) request. The seed block
// uses the group's first sampled column and always includes the group's
// ground-truth label name.
Prompt build_prompt(const SeedGroup& group, const LabelVocabulary& vocabulary,
                    const std::vector<Demonstration>& demos, const GenerationConfig& cfg,
                    LfKind kind, const PromptTemplate& tmpl);

struct ParseOutcome {
    std::vector<LabelingFunction> lfs;
    std::vector<std::string> diagnostics;
};

// Extracts every well-formed DSL record from free-form response text by
// scanning for balanced JSON regions. Records missing target_label inherit
// `target_label_name`. Never throws on junk input.
ParseOutcome parse_llm_response(const std::string& text, const std::string& target_label_name,
                                const LabelVocabulary& vocabulary);

// Pure derivation of up to one LF per kind from seed values:
// keyword = most frequent tokens (length >= 3), regex = majority cell
// shape generalized to character classes, statistical = min/max numeric
// range when >= 90% of values parse numeric. Prose-wrapped DSL array.
std::string mock_generate(const std::string& label_name, const std::vector<std::string>& values,
                          const std::vector<LfKind>& kinds);
std::string mock_generate(const SeedGroup& group, const LabelVocabulary& vocabulary);

struct GenerationResult {
    std::vector<LabelingFunction> lfs;
    std::vector<BackendExchange> exchanges;
    std::vector<std::string> warnings;
};

// One exchange per (seed group x requested kind); failed groups are
// recorded and skipped; throws only if nothing parses anywhere.
GenerationResult generate_lfs(LlmBackend& backend, const SeedSet& seeds,
                              const LabelVocabulary& vocabulary,
                              const std::vector<Demonstration>& demos, const GenerationConfig& cfg,
                              const PromptTemplate& tmpl);

} // namespace lakelabel
