#include "lakelabel/eval.hpp"

#include "lakelabel/text.hpp"

#include <sstream>

namespace lakelabel {

using ordered_json = nlohmann::ordered_json;

namespace {

double binary_f1(std::size_t tp, std::size_t fp, std::size_t fn) {
    std::size_t denom = 2 * tp + fp + fn;
    if (denom == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

} // namespace

EvalReport evaluate(const std::vector<int>& predictions, const std::vector<int>& gold, int M) {
    if (predictions.size() != gold.size())
        throw Error("evaluate: predictions and gold are misaligned (" +
                    std::to_string(predictions.size()) + " vs " + std::to_string(gold.size()) + ")");
    EvalReport report;
    report.instances = gold.size();
    report.per_label.resize(static_cast<std::size_t>(M));
    for (int y = 0; y < M; ++y) report.per_label[static_cast<std::size_t>(y)].label = y;

    for (std::size_t i = 0; i < gold.size(); ++i) {
        int g = gold[i];
        int p = predictions[i];
        if (g < 0 || g >= M) throw Error("evaluate: gold label out of range at instance " +
                                         std::to_string(i));
        if (p >= M) throw Error("evaluate: prediction out of range at instance " + std::to_string(i));
        report.per_label[static_cast<std::size_t>(g)].support += 1;
        if (p == kAbstain) {
            report.per_label[static_cast<std::size_t>(g)].fn += 1;
            continue;
        }
        report.predicted += 1;
        if (p == g) {
            report.correct += 1;
            report.per_label[static_cast<std::size_t>(p)].tp += 1;
        } else {
            report.per_label[static_cast<std::size_t>(p)].fp += 1;
            report.per_label[static_cast<std::size_t>(g)].fn += 1;
        }
    }

    report.coverage = report.instances == 0
                          ? 0.0
                          : static_cast<double>(report.predicted) / static_cast<double>(report.instances);

    // Micro: global precision over non-abstain predictions, recall over all
    // gold instances (abstains are misses).
    double precision = report.predicted == 0
                           ? 0.0
                           : static_cast<double>(report.correct) / static_cast<double>(report.predicted);
    double recall = report.instances == 0
                        ? 0.0
                        : static_cast<double>(report.correct) / static_cast<double>(report.instances);
    report.micro_f1 = (precision + recall) == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);

    double macro_sum = 0.0;
    std::size_t macro_count = 0;
    for (auto& row : report.per_label) {
        row.precision = (row.tp + row.fp) == 0
                            ? 0.0
                            : static_cast<double>(row.tp) / static_cast<double>(row.tp + row.fp);
        row.recall = (row.tp + row.fn) == 0
                         ? 0.0
                         : static_cast<double>(row.tp) / static_cast<double>(row.tp + row.fn);
        row.f1 = binary_f1(row.tp, row.fp, row.fn);
        if (row.support > 0) {
            macro_sum += row.f1;
            macro_count += 1;
        }
    }
    report.macro_f1 = macro_count == 0 ? 0.0 : macro_sum / static_cast<double>(macro_count);
    return report;
}

double avg_lf_f1(const std::vector<LabelingFunction>& lfs, const LabelMatrix& matrix,
                 const std::vector<int>& gold) {
    if (lfs.empty()) throw Error("avg_lf_f1: empty LF set");
    if (lfs.size() != matrix.m) throw Error("avg_lf_f1: LF list and matrix disagree on LF count");
    if (gold.size() != matrix.n)
        throw Error("avg_lf_f1: gold labels misaligned with matrix instances");

    std::vector<std::vector<char>> voted(matrix.m, std::vector<char>(matrix.n, 0));
    for (const auto& v : matrix.votes) voted[v.lf][v.instance] = 1;

    double sum = 0.0;
    for (std::size_t j = 0; j < matrix.m; ++j) {
        int target = lfs[j].target_label;
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < matrix.n; ++i) {
            bool positive = voted[j][i];
            bool is_target = gold[i] == target;
            if (positive && is_target) ++tp;
            else if (positive && !is_target) ++fp;
            else if (!positive && is_target) ++fn;
        }
        sum += binary_f1(tp, fp, fn);
    }
    return sum / static_cast<double>(lfs.size());
}

ordered_json report_to_json(const EvalReport& report, const LabelVocabulary& vocabulary) {
    ordered_json doc;
    doc["stage"] = report.stage;
    doc["micro_f1"] = report.micro_f1;
    doc["macro_f1"] = report.macro_f1;
    if (report.avg_lf_f1) doc["avg_lf_f1"] = *report.avg_lf_f1;
    doc["coverage"] = report.coverage;
    doc["counts"] = {{"instances", report.instances},
                     {"predicted", report.predicted},
                     {"correct", report.correct}};
    if (report.majority_vote_micro_f1) doc["majority_vote_micro_f1"] = *report.majority_vote_micro_f1;
    if (report.majority_vote_macro_f1) doc["majority_vote_macro_f1"] = *report.majority_vote_macro_f1;
    doc["per_label"] = ordered_json::array();
    for (const auto& row : report.per_label) {
        ordered_json jr;
        jr["label"] = vocabulary.name(row.label);
        jr["tp"] = row.tp;
        jr["fp"] = row.fp;
        jr["fn"] = row.fn;
        jr["support"] = row.support;
        jr["precision"] = row.precision;
        jr["recall"] = row.recall;
        jr["f1"] = row.f1;
        doc["per_label"].push_back(std::move(jr));
    }
    if (!report.notes.empty()) doc["notes"] = report.notes;
    return doc;
}

EvalReport report_from_json_text(const std::string& text, const LabelVocabulary& vocabulary) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed report: ") + e.what());
    }
    EvalReport report;
    report.stage = doc.at("stage").get<std::string>();
    report.micro_f1 = doc.at("micro_f1").get<double>();
    report.macro_f1 = doc.at("macro_f1").get<double>();
    if (doc.contains("avg_lf_f1")) report.avg_lf_f1 = doc["avg_lf_f1"].get<double>();
    report.coverage = doc.at("coverage").get<double>();
    report.instances = doc.at("counts").at("instances").get<std::size_t>();
    report.predicted = doc.at("counts").at("predicted").get<std::size_t>();
    report.correct = doc.at("counts").at("correct").get<std::size_t>();
    if (doc.contains("majority_vote_micro_f1"))
        report.majority_vote_micro_f1 = doc["majority_vote_micro_f1"].get<double>();
    if (doc.contains("majority_vote_macro_f1"))
        report.majority_vote_macro_f1 = doc["majority_vote_macro_f1"].get<double>();
    for (const auto& jr : doc.at("per_label")) {
        PerLabelMetrics row;
        auto idx = vocabulary.index_of(jr.at("label").get<std::string>());
        if (!idx) throw Error("report references unknown label");
        row.label = *idx;
        row.tp = jr.at("tp").get<std::size_t>();
        row.fp = jr.at("fp").get<std::size_t>();
        row.fn = jr.at("fn").get<std::size_t>();
        row.support = jr.at("support").get<std::size_t>();
        row.precision = jr.at("precision").get<double>();
        row.recall = jr.at("recall").get<double>();
        row.f1 = jr.at("f1").get<double>();
        report.per_label.push_back(row);
    }
    if (doc.contains("notes")) report.notes = doc["notes"].get<std::string>();
    return report;
}

std::string weak_labels_to_jsonl(const std::vector<WeakLabelRecord>& records,
                                 const LabelVocabulary& vocabulary) {
    std::ostringstream out;
    for (const auto& rec : records) {
        ordered_json line;
        line["column_id"] = rec.column_id;
        line["label"] = rec.label == kAbstain ? ordered_json(nullptr)
                                              : ordered_json(vocabulary.name(rec.label));
        line["probs"] = rec.probs;
        line["abstained"] = rec.abstained;
        out << line.dump() << "\n";
    }
    return out.str();
}

std::vector<WeakLabelRecord> weak_labels_from_jsonl(const std::string& text,
                                                    const LabelVocabulary& vocabulary) {
    std::vector<WeakLabelRecord> records;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        ordered_json doc;
        try {
            doc = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("weak-label line " + std::to_string(lineno) + ": " + e.what());
        }
        WeakLabelRecord rec;
        rec.column_id = doc.at("column_id").get<std::string>();
        if (!doc.at("label").is_null()) {
            auto idx = vocabulary.index_of(doc["label"].get<std::string>());
            if (!idx) throw Error("weak-label line " + std::to_string(lineno) + ": unknown label");
            rec.label = *idx;
        }
        for (const auto& p : doc.at("probs")) rec.probs.push_back(p.get<double>());
        rec.abstained = doc.at("abstained").get<bool>();
        records.push_back(std::move(rec));
    }
    return records;
}

void export_weak_labels(const std::vector<WeakLabelRecord>& records,
                        const LabelVocabulary& vocabulary, const std::string& path) {
    write_text_file(path, weak_labels_to_jsonl(records, vocabulary));
}

} // namespace lakelabel
