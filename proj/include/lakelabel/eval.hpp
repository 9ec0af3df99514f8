#pragma once

#include "lakelabel/corpus.hpp"
#include "lakelabel/label_model.hpp"
#include "lakelabel/lf.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lakelabel {

struct PerLabelMetrics {
    int label = 0;
    std::size_t tp = 0, fp = 0, fn = 0;
    std::size_t support = 0; // gold instances of this label
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct EvalReport {
    std::string stage; // "lf" | "label_model" | "stacked"
    double micro_f1 = 0.0;
    double macro_f1 = 0.0; // averaged over labels present in gold
    std::optional<double> avg_lf_f1;
    double coverage = 0.0; // non-abstain prediction fraction
    std::size_t instances = 0;
    std::size_t predicted = 0;
    std::size_t correct = 0;
    std::vector<PerLabelMetrics> per_label;
    std::optional<double> majority_vote_micro_f1;
    std::optional<double> majority_vote_macro_f1;
    std::string notes;
};

// predictions may contain kAbstain; abstains count against recall but not
// precision. gold must be fully labeled and aligned.
EvalReport evaluate(const std::vector<int>& predictions, const std::vector<int>& gold, int M);

// One-vs-rest binary F1 of each LF's votes against gold==target,
// averaged unweighted across LFs. A zero-vote LF contributes 0.
double avg_lf_f1(const std::vector<LabelingFunction>& lfs, const LabelMatrix& matrix,
                 const std::vector<int>& gold);

nlohmann::ordered_json report_to_json(const EvalReport& report, const LabelVocabulary& vocabulary);
EvalReport report_from_json_text(const std::string& text, const LabelVocabulary& vocabulary);

struct WeakLabelRecord {
    std::string column_id;
    int label = kAbstain; // argmax; kAbstain only when probs are degenerate
    std::vector<double> probs;
    bool abstained = false;
};

std::string weak_labels_to_jsonl(const std::vector<WeakLabelRecord>& records,
                                 const LabelVocabulary& vocabulary);
std::vector<WeakLabelRecord> weak_labels_from_jsonl(const std::string& text,
                                                    const LabelVocabulary& vocabulary);
void export_weak_labels(const std::vector<WeakLabelRecord>& records,
                        const LabelVocabulary& vocabulary, const std::string& path);

} // namespace lakelabel
