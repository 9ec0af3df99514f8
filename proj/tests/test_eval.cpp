#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lakelabel/eval.hpp"
#include "lakelabel/rng.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <filesystem>

using namespace lakelabel;

namespace {

LabelingFunction stub_lf(const std::string& id, int target) {
    LabelingFunction lf;
    lf.id = id;
    lf.target_label = target;
    KeywordParams kp;
    kp.keywords = {"k" + id};
    lf.params = kp;
    return lf;
}

} // namespace

TEST_CASE("evaluate: perfect and all-abstain cases") {
    std::vector<int> gold = {0, 1, 2, 1};
    auto perfect = evaluate(gold, gold, 3);
    CHECK(perfect.micro_f1 == 1.0);
    CHECK(perfect.macro_f1 == 1.0);
    CHECK(perfect.coverage == 1.0);

    std::vector<int> abstain(gold.size(), kAbstain);
    auto none = evaluate(abstain, gold, 3);
    CHECK(none.micro_f1 == 0.0);
    CHECK(none.coverage == 0.0);

    std::vector<int> bad = {0};
    CHECK_THROWS_WITH_AS(evaluate(bad, gold, 3), doctest::Contains("misaligned"), Error);
}

TEST_CASE("evaluate: 3-label confusion fixture matches hand computation") {
    // gold:  0 0 0 1 1 2 2 2 2 -
    // pred:  0 1 0 1 -  2 0 2 2
    std::vector<int> gold = {0, 0, 0, 1, 1, 2, 2, 2, 2};
    std::vector<int> pred = {0, 1, 0, 1, kAbstain, 2, 0, 2, 2};
    auto report = evaluate(pred, gold, 3);

    // Hand counts: tp0=2 fp0=1 fn0=1; tp1=1 fp1=1 fn1=1; tp2=3 fp2=0 fn2=1.
    CHECK(report.per_label[0].tp == 2);
    CHECK(report.per_label[0].fp == 1);
    CHECK(report.per_label[0].fn == 1);
    CHECK(report.per_label[1].precision == doctest::Approx(0.5));
    CHECK(report.per_label[1].recall == doctest::Approx(0.5));
    CHECK(report.per_label[2].f1 == doctest::Approx(6.0 / 7.0));

    // Micro: precision 6/8, recall 6/9.
    double precision = 6.0 / 8.0, recall = 6.0 / 9.0;
    CHECK(report.micro_f1 == doctest::Approx(2 * precision * recall / (precision + recall)));
    double macro = (oracle::binary_f1_oracle(2, 1, 1) + oracle::binary_f1_oracle(1, 1, 1) +
                    oracle::binary_f1_oracle(3, 0, 1)) /
                   3.0;
    CHECK(report.macro_f1 == doctest::Approx(macro));

    auto expected = oracle::eval_by_enumeration(pred, gold, 3);
    CHECK(report.micro_f1 == doctest::Approx(expected.micro_f1));
    CHECK(report.macro_f1 == doctest::Approx(expected.macro_f1));
}

TEST_CASE("evaluate equals the enumeration oracle on random data") {
    Rng rng(2025);
    for (int trial = 0; trial < 40; ++trial) {
        int M = 2 + int(rng.bounded(7));
        std::size_t n = 5 + rng.bounded(60);
        std::vector<int> gold, pred;
        for (std::size_t i = 0; i < n; ++i) {
            gold.push_back(int(rng.bounded(std::uint64_t(M))));
            pred.push_back(rng.real01() < 0.2 ? kAbstain : int(rng.bounded(std::uint64_t(M))));
        }
        auto report = evaluate(pred, gold, M);
        auto expected = oracle::eval_by_enumeration(pred, gold, M);
        CHECK(report.micro_f1 == doctest::Approx(expected.micro_f1).epsilon(1e-12));
        CHECK(report.macro_f1 == doctest::Approx(expected.macro_f1).epsilon(1e-12));

        // Micro F1 equals accuracy when nothing abstains.
        std::vector<int> full = pred;
        for (auto& p : full)
            if (p == kAbstain) p = int(rng.bounded(std::uint64_t(M)));
        auto full_report = evaluate(full, gold, M);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < n; ++i) correct += full[i] == gold[i] ? 1 : 0;
        CHECK(full_report.micro_f1 == doctest::Approx(double(correct) / double(n)));

        // Invariance to simultaneous permutation of (predictions, gold).
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.bounded(i)]);
        std::vector<int> gold_p, pred_p;
        for (std::size_t i : order) {
            gold_p.push_back(gold[i]);
            pred_p.push_back(pred[i]);
        }
        auto permuted = evaluate(pred_p, gold_p, M);
        CHECK(permuted.micro_f1 == report.micro_f1);
        CHECK(permuted.macro_f1 == report.macro_f1);
    }
}

TEST_CASE("avg_lf_f1 definitions") {
    // One LF per label over 6 instances.
    std::vector<int> gold = {0, 0, 1, 1, 1, 0};
    LabelMatrix matrix;
    matrix.n = 6;
    matrix.m = 2;
    matrix.lf_ids = {"a", "b"};
    // lf a (target 0): votes exactly on the gold-0 rows -> F1 1.
    matrix.votes = {{0, 0, 0}, {1, 0, 0}, {5, 0, 0}};
    std::vector<LabelingFunction> lfs = {stub_lf("a", 0), stub_lf("b", 1)};
    // lf b never votes -> contributes 0.
    CHECK(avg_lf_f1(lfs, matrix, gold) == doctest::Approx(0.5));

    CHECK_THROWS_WITH_AS(avg_lf_f1({}, matrix, gold), doctest::Contains("empty"), Error);
}

TEST_CASE("avg_lf_f1 equals the counting oracle and ignores LF order") {
    Rng rng(314);
    std::size_t n = 40, m = 5;
    int M = 4;
    std::vector<LabelingFunction> lfs;
    std::vector<int> targets;
    LabelMatrix matrix;
    matrix.n = n;
    matrix.m = m;
    for (std::size_t j = 0; j < m; ++j) {
        int t = int(rng.bounded(std::uint64_t(M)));
        targets.push_back(t);
        lfs.push_back(stub_lf("lf" + std::to_string(j), t));
        matrix.lf_ids.push_back("lf" + std::to_string(j));
    }
    std::vector<int> gold;
    for (std::size_t i = 0; i < n; ++i) gold.push_back(int(rng.bounded(std::uint64_t(M))));
    std::vector<std::vector<char>> votes(m, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (rng.real01() < 0.45) {
                votes[j][i] = 1;
                matrix.votes.push_back({std::uint32_t(i), std::uint32_t(j),
                                        std::uint32_t(targets[j])});
            }

    double expected = 0;
    for (std::size_t j = 0; j < m; ++j) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            bool pos = votes[j][i];
            bool is_t = gold[i] == targets[j];
            if (pos && is_t) ++tp;
            if (pos && !is_t) ++fp;
            if (!pos && is_t) ++fn;
        }
        expected += oracle::binary_f1_oracle(tp, fp, fn);
    }
    expected /= double(m);
    CHECK(avg_lf_f1(lfs, matrix, gold) == doctest::Approx(expected).epsilon(1e-12));

    // LF order invariance: reverse columns.
    LabelMatrix reversed;
    reversed.n = n;
    reversed.m = m;
    std::vector<LabelingFunction> lfs_r(lfs.rbegin(), lfs.rend());
    for (std::size_t j = 0; j < m; ++j) reversed.lf_ids.push_back(lfs_r[j].id);
    for (const auto& v : matrix.votes)
        reversed.votes.push_back({v.instance, std::uint32_t(m - 1 - v.lf), v.label});
    CHECK(avg_lf_f1(lfs_r, reversed, gold) == doctest::Approx(avg_lf_f1(lfs, matrix, gold)));
}

TEST_CASE("weak label export and re-import") {
    auto vocab = LabelVocabulary::from_names({"year", "isbn"});
    std::vector<WeakLabelRecord> records;
    WeakLabelRecord a;
    a.column_id = "c1";
    a.label = 0;
    a.probs = {0.875, 0.125};
    records.push_back(a);
    WeakLabelRecord b;
    b.column_id = "c2";
    b.label = 1;
    b.probs = {1.0 / 3.0, 2.0 / 3.0};
    b.abstained = true;
    records.push_back(b);

    auto dir = std::filesystem::temp_directory_path() / "lakelabel_weak";
    std::filesystem::remove_all(dir);
    std::string path = (dir / "weak.jsonl").string();
    export_weak_labels(records, vocab, path);

    std::string text = read_text_file(path);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.find("\"abstained\":true") != std::string::npos);

    auto back = weak_labels_from_jsonl(text, vocab);
    REQUIRE(back.size() == 2);
    CHECK(back[0].column_id == "c1");
    CHECK(back[0].label == 0);      // argmax reproduced exactly
    CHECK(back[1].label == 1);
    CHECK(back[0].probs == records[0].probs); // full-precision round trip
    CHECK(back[1].probs == records[1].probs);
    CHECK(back[1].abstained);
}

TEST_CASE("report JSON round trip is lossless") {
    auto vocab = LabelVocabulary::from_names({"a", "b", "c"});
    std::vector<int> gold = {0, 1, 2, 2, 1};
    std::vector<int> pred = {0, 1, kAbstain, 2, 0};
    auto report = evaluate(pred, gold, 3);
    report.stage = "stacked";
    report.avg_lf_f1 = 1.0 / 3.0;
    report.majority_vote_micro_f1 = 0.625;
    report.notes = "note";
    std::string text = report_to_json(report, vocab).dump(2);
    auto back = report_from_json_text(text, vocab);
    CHECK(report_to_json(back, vocab).dump(2) == text);
    CHECK(back.micro_f1 == report.micro_f1);
    CHECK(back.per_label.size() == report.per_label.size());
    CHECK(*back.avg_lf_f1 == *report.avg_lf_f1);
}
