#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lakelabel/lf.hpp"
#include "lakelabel/rng.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <set>

using namespace lakelabel;

namespace {

LabelVocabulary fixture_vocab() {
    return LabelVocabulary::from_names({"isbn", "year", "name", "price", "city"});
}

ColumnInstance column(std::string id, std::vector<std::string> values) {
    ColumnInstance col;
    col.column_id = std::move(id);
    col.table_id = "t";
    col.values = std::move(values);
    return col;
}

LabelingFunction make_keyword(const std::string& id, int target, std::vector<std::string> kws,
                              double tau = 0.6, MatchMode mode = MatchMode::Substring,
                              bool cs = false) {
    LabelingFunction lf;
    lf.id = id;
    lf.target_label = target;
    KeywordParams kp;
    kp.keywords = std::move(kws);
    kp.min_fraction = tau;
    kp.match_mode = mode;
    kp.case_sensitive = cs;
    lf.params = kp;
    return lf;
}

LabelingFunction make_range(const std::string& id, int target, double lo, double hi, double frac) {
    LabelingFunction lf;
    lf.id = id;
    lf.target_label = target;
    StatisticalParams sp;
    sp.constraints.push_back({"fraction_in_numeric_range", Comparator::GreaterEq, frac,
                              std::make_pair(lo, hi)});
    lf.params = sp;
    return lf;
}

LabelingFunction make_regex(const std::string& id, int target, const std::string& pattern,
                            bool full, double tau) {
    LabelingFunction lf;
    lf.id = id;
    lf.target_label = target;
    RegexParams rp;
    rp.pattern = pattern;
    rp.full_match = full;
    rp.min_fraction = tau;
    lf.params = rp;
    return lf;
}

// Random structurally valid LF for round-trip property tests.
LabelingFunction random_lf(Rng& rng, const LabelVocabulary& vocab, std::size_t tag) {
    int target = int(rng.bounded(std::uint64_t(vocab.size())));
    std::string id = "rand_" + std::to_string(tag);
    switch (rng.bounded(3)) {
        case 0: {
            std::vector<std::string> kws;
            std::size_t n = 1 + rng.bounded(4);
            for (std::size_t k = 0; k < n; ++k)
                kws.push_back(std::string(1, char('A' + rng.bounded(26))) +
                              std::string(1, char('a' + rng.bounded(26))) +
                              std::to_string(rng.bounded(100)));
            return make_keyword(id, target, kws, 0.1 + 0.1 * double(rng.bounded(10)),
                                rng.bounded(2) ? MatchMode::Token : MatchMode::Substring,
                                rng.bounded(2) != 0);
        }
        case 1: {
            LabelingFunction lf;
            lf.id = id;
            lf.target_label = target;
            StatisticalParams sp;
            const char* stats[] = {"fraction_numeric", "numeric_min", "numeric_max",
                                   "numeric_mean",     "mean_length", "distinct_ratio"};
            Comparator cmps[] = {Comparator::Less, Comparator::LessEq, Comparator::Eq,
                                 Comparator::GreaterEq, Comparator::Greater};
            std::size_t n = 1 + rng.bounded(3);
            for (std::size_t k = 0; k < n; ++k)
                sp.constraints.push_back({stats[rng.bounded(6)], cmps[rng.bounded(5)],
                                          double(rng.bounded(2000)) / 7.0, std::nullopt});
            double lo = double(rng.bounded(100));
            sp.constraints.push_back({"fraction_in_numeric_range", Comparator::GreaterEq,
                                      0.5, std::make_pair(lo, lo + double(rng.bounded(100)))});
            lf.params = sp;
            return lf;
        }
        default: {
            const char* patterns[] = {"\\d{4}", "[A-Z][a-z]+", "a|b", "x{1,3}y", "^q.*z$"};
            return make_regex(id, target, patterns[rng.bounded(5)], rng.bounded(2) != 0,
                              0.1 + 0.1 * double(rng.bounded(10)));
        }
    }
}

} // namespace

TEST_CASE("parse keyword record") {
    auto vocab = fixture_vocab();
    auto lf = parse_lf(R"({"id":"kw1","kind":"keyword","target_label":"isbn",
        "params":{"keywords":["ISBN"],"min_fraction":0.8}})", vocab);
    CHECK(lf.kind() == LfKind::Keyword);
    CHECK(lf.target_label == 0);
    auto& kp = std::get<KeywordParams>(lf.params);
    CHECK(kp.keywords == std::vector<std::string>{"ISBN"});
    CHECK(kp.min_fraction == 0.8);
    CHECK(kp.match_mode == MatchMode::Substring); // default
    CHECK(lf.provenance.source == "manual");      // default
}

TEST_CASE("parse errors name the field") {
    auto vocab = fixture_vocab();
    CHECK_THROWS_WITH_AS(parse_lf(R"({"id":"x","kind":"keyword","params":{"keywords":["a"]}})", vocab),
                         doctest::Contains("target_label"), Error);
    CHECK_THROWS_WITH_AS(parse_lf(R"({"id":"x","kind":"keyword","target_label":"zzz",
        "params":{"keywords":["a"]}})", vocab), doctest::Contains("zzz"), Error);
    CHECK_THROWS_WITH_AS(parse_lf(R"({"id":"x","kind":"keyword","target_label":"isbn",
        "params":{"keywords":["a"],"bogus":1}})", vocab), doctest::Contains("bogus"), Error);
    CHECK_THROWS_WITH_AS(parse_lf(R"({"id":"x","kind":"regex","target_label":"isbn",
        "params":{"pattern":"(a"}})", vocab), doctest::Contains("position"), Error);
    CHECK_THROWS_AS(parse_lf(R"({"id":"has space","kind":"keyword","target_label":"isbn",
        "params":{"keywords":["a"]}})", vocab), Error);
    CHECK_THROWS_AS(parse_lf(R"({"id":"x","kind":"keyword","target_label":"isbn",
        "params":{"keywords":["a"],"min_fraction":0.0}})", vocab), Error);
    CHECK_THROWS_AS(parse_lf(R"({"id":"x","kind":"statistical","target_label":"isbn",
        "params":{"constraints":[{"stat":"numeric_min","comparator":">=","value":1,
        "range":[0,1]}]}})", vocab), Error); // range forbidden off fraction_in_numeric_range
    CHECK_THROWS_AS(parse_lf(R"({"id":"x","kind":"statistical","target_label":"isbn",
        "params":{"constraints":[{"stat":"fraction_in_numeric_range","comparator":">=",
        "value":0.5,"range":[5,1]}]}})", vocab), Error); // lo > hi
}

TEST_CASE("serialization canonicality") {
    auto vocab = fixture_vocab();
    auto a = make_keyword("kw", 0, {"b", "A"});
    auto b = make_keyword("kw", 0, {"A", "b"});
    CHECK(serialize_lf(a, vocab) == serialize_lf(b, vocab));
    CHECK(serialize_lf(a, vocab).find(R"(["A","b"])") != std::string::npos);

    // parse(serialize(lf)) == lf and serialize is a fixpoint, over random LFs
    Rng rng(555);
    for (std::size_t t = 0; t < 200; ++t) {
        LabelingFunction lf = random_lf(rng, vocab, t);
        std::string once = serialize_lf(lf, vocab);
        LabelingFunction back = parse_lf(once, vocab);
        CHECK(back == lf);
        CHECK(serialize_lf(back, vocab) == once);
    }
}

TEST_CASE("lf set file round trip") {
    auto vocab = fixture_vocab();
    std::vector<LabelingFunction> lfs = {make_keyword("a", 0, {"ISBN"}, 0.8),
                                         make_range("b", 1, 1700, 2023, 0.9),
                                         make_regex("c", 2, "[A-Z][a-z]+", true, 0.6)};
    std::string text = lf_set_to_json(lfs, vocab);
    auto back = lf_set_from_json_text(text, vocab);
    CHECK(back == lfs);
    CHECK(lf_set_to_json(back, vocab) == text);
}

TEST_CASE("apply: isbn keyword fixture") {
    auto vocab = fixture_vocab();
    auto lf = make_keyword("isbn_kw", 0, {"ISBN"}, 0.8);
    auto col = column("c", {"ISBN 0-553-57340-3", "ISBN 0-14-044913-6", "ISBN 0-7432-7356-7"});
    CHECK(apply_lf(lf, col) == 0);
    auto names = column("n", {"John Smith", "Mary", "Ada Lovelace"});
    CHECK(apply_lf(lf, names) == kAbstain);
}

TEST_CASE("apply: year statistical fixture") {
    auto vocab = fixture_vocab();
    auto lf = make_range("year_range", 1, 1700, 2023, 0.9);
    CHECK(apply_lf(lf, column("c", {"1999", "2004", "1875"})) == 1);
    CHECK(apply_lf(lf, column("p", {"5000", "12000", "7300"})) == kAbstain);
}

TEST_CASE("apply: name regex fixture") {
    auto vocab = fixture_vocab();
    auto lf = make_regex("name_rx", 2, "[A-Z][a-z]+( [A-Z][a-z]+)?", true, 0.6);
    CHECK(apply_lf(lf, column("c", {"John Smith", "Mary", "Ada Lovelace"})) == 2);
}

TEST_CASE("apply: empty column abstains for every kind") {
    auto empty = column("e", {});
    CHECK(apply_lf(make_keyword("k", 0, {"x"}), empty) == kAbstain);
    CHECK(apply_lf(make_range("s", 1, 0, 1, 0.1), empty) == kAbstain);
    CHECK(apply_lf(make_regex("r", 2, ".*", false, 0.1), empty) == kAbstain);
}

TEST_CASE("threshold boundary is inclusive: 3 of 5 at tau=0.6") {
    auto col = column("c", {"ax", "ax", "ax", "b", "b"});
    std::size_t hits = 0;
    for (const auto& v : col.values) hits += v.find("ax") != std::string::npos ? 1 : 0;
    REQUIRE(hits == 3); // oracle: direct count
    CHECK(apply_lf(make_keyword("k", 0, {"ax"}, 0.6), col) == 0);
    CHECK(apply_lf(make_keyword("k", 0, {"ax"}, 0.61), col) == kAbstain);
}

TEST_CASE("token vs substring matching and case rules") {
    auto col = column("c", {"the ISBN code", "isbnish"});
    CHECK(apply_lf(make_keyword("sub", 0, {"isbn"}, 0.9), col) == 0);          // substring, ci
    CHECK(apply_lf(make_keyword("tok", 0, {"isbn"}, 0.9, MatchMode::Token), col) == kAbstain);
    CHECK(apply_lf(make_keyword("tok1", 0, {"isbn"}, 0.5, MatchMode::Token), col) == 0);
    CHECK(apply_lf(make_keyword("cs", 0, {"isbn"}, 0.5, MatchMode::Substring, true), col) == 0);
    CHECK(apply_lf(make_keyword("cs2", 0, {"IsBn"}, 0.5, MatchMode::Substring, true), col) ==
          kAbstain);
}

TEST_CASE("apply_lf invariants") {
    auto vocab = fixture_vocab();
    Rng rng(808);
    std::vector<std::string> cells = {"ISBN 1", "1999", "John Smith", "x", "", "ISBN 2", "2004"};
    for (std::size_t t = 0; t < 50; ++t) {
        LabelingFunction lf = random_lf(rng, vocab, t);
        auto base = column("c", cells);
        int expected = apply_lf(lf, base);
        auto shuffled = base;
        for (std::size_t i = shuffled.values.size(); i > 1; --i)
            std::swap(shuffled.values[i - 1], shuffled.values[rng.bounded(i)]);
        CHECK(apply_lf(lf, shuffled) == expected); // cell-order invariance
        CHECK(apply_lf(lf, base) == expected);     // determinism
    }

    // Keyword monotonicity: adding a keyword never un-fires a firing LF.
    auto col = column("c", {"alpha one", "beta two", "alpha three"});
    auto lf = make_keyword("k", 0, {"alpha"}, 0.6);
    if (apply_lf(lf, col) == 0) {
        auto more = make_keyword("k", 0, {"alpha", "beta"}, 0.6);
        CHECK(apply_lf(more, col) == 0);
    }

    // Threshold monotonicity: raising tau never converts ABSTAIN to vote.
    for (double tau_low : {0.2, 0.5, 0.7}) {
        auto low = make_keyword("k", 0, {"alpha"}, tau_low);
        auto high = make_keyword("k", 0, {"alpha"}, std::min(1.0, tau_low + 0.3));
        if (apply_lf(low, col) == kAbstain) CHECK(apply_lf(high, col) == kAbstain);
    }
}

TEST_CASE("apply_all basics and alignment") {
    auto vocab = fixture_vocab();
    std::vector<LabelingFunction> lfs = {make_keyword("never", 0, {"zzzz"}, 0.9)};
    std::vector<ColumnInstance> cols = {column("c0", {"a"})};
    auto matrix = apply_all(lfs, cols);
    CHECK(matrix.n == 1);
    CHECK(matrix.m == 1);
    CHECK(matrix.votes.empty());
    CHECK(matrix.instance_ids == std::vector<std::string>{"c0"});

    std::vector<LabelingFunction> dup = {make_keyword("same", 0, {"a"}),
                                         make_keyword("same", 1, {"b"})};
    CHECK_THROWS_WITH_AS(apply_all(dup, cols), doctest::Contains("duplicate LF id"), Error);
}

TEST_CASE("apply_all equals per-cell oracle and permutes with columns") {
    auto vocab = fixture_vocab();
    std::vector<LabelingFunction> lfs = {make_keyword("kw", 0, {"ISBN"}, 0.6),
                                         make_range("st", 1, 1000, 3000, 0.5),
                                         make_regex("rx", 2, "[A-Z][a-z]+", true, 0.5)};
    std::vector<ColumnInstance> cols;
    for (int i = 0; i < 5; ++i)
        cols.push_back(column("c" + std::to_string(i),
                              {i % 2 ? "ISBN 5" : "1999", "Mary", std::to_string(1000 + i)}));
    auto matrix = apply_all(lfs, cols);
    auto dense = oracle::dense_apply(lfs, cols);
    std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> sparse;
    for (const auto& v : matrix.votes) sparse.insert({v.instance, v.lf, v.label});
    for (std::size_t i = 0; i < cols.size(); ++i) {
        for (std::size_t j = 0; j < lfs.size(); ++j) {
            bool in_sparse = sparse.count({std::uint32_t(i), std::uint32_t(j),
                                           std::uint32_t(std::max(dense[i][j], 0))}) > 0;
            if (dense[i][j] == kAbstain) {
                for (auto [a, b, c] : sparse)
                    if (a == i && b == j) FAIL("unexpected vote");
            } else {
                CHECK(in_sparse);
            }
        }
    }

    // Row permutation follows column order.
    std::vector<ColumnInstance> reversed(cols.rbegin(), cols.rend());
    auto rev = apply_all(lfs, reversed);
    auto rows = matrix.rows();
    auto rev_rows = rev.rows();
    for (std::size_t i = 0; i < cols.size(); ++i)
        CHECK(rev_rows[cols.size() - 1 - i] == rows[i]);
}

TEST_CASE("matrix file format is bit-exact and lexicographically sorted") {
    LabelMatrix matrix;
    matrix.n = 12;
    matrix.m = 2;
    matrix.votes = {{2, 0, 1}, {10, 0, 0}, {0, 1, 3}, {11, 1, 2}};
    std::string text = matrix_to_text(matrix);
    CHECK(text == "12 2\n0 1 3\n10 0 0\n11 1 2\n2 0 1\n"); // string-sorted lines
    LabelMatrix back = matrix_from_text(text);
    CHECK(back.n == 12);
    CHECK(back.m == 2);
    CHECK(back.votes.size() == 4);
    back.instance_ids.clear();
    back.lf_ids.clear();
    CHECK(matrix_to_text(back) == text);

    CHECK_THROWS_AS(matrix_from_text("2 2\n5 0 0\n"), Error);       // out of bounds
    CHECK_THROWS_AS(matrix_from_text("2 2\n0 0 0\n0 0 1\n"), Error); // duplicate pair
}

TEST_CASE("lf_stats definitions") {
    // Instance x LF dense fixture, hand-checkable.
    //        lf0   lf1   lf2
    // i0      0     0     -
    // i1      0     1     1
    // i2      -     -     0
    LabelMatrix matrix;
    matrix.n = 3;
    matrix.m = 3;
    matrix.lf_ids = {"lf0", "lf1", "lf2"};
    matrix.votes = {{0, 0, 0}, {0, 1, 0}, {1, 0, 0}, {1, 1, 1}, {1, 2, 1}, {2, 2, 0}};
    std::vector<int> gold = {0, 1, 0};
    auto stats = lf_stats(matrix, gold);

    CHECK(stats[0].coverage == doctest::Approx(2.0 / 3));
    CHECK(stats[0].overlap == doctest::Approx(1.0));
    CHECK(stats[0].conflict == doctest::Approx(0.5)); // i1: lf1/lf2 vote 1 against lf0's 0
    CHECK(*stats[0].empirical_accuracy == doctest::Approx(0.5));
    CHECK(stats[2].votes == 2);
    CHECK(*stats[2].empirical_accuracy == doctest::Approx(1.0));

    // Identical LFs: overlap 1, conflict 0.
    LabelMatrix twin;
    twin.n = 2;
    twin.m = 2;
    twin.votes = {{0, 0, 1}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}};
    auto twin_stats = lf_stats(twin);
    for (const auto& s : twin_stats) {
        CHECK(s.coverage == 1.0);
        CHECK(s.overlap == 1.0);
        CHECK(s.conflict == 0.0);
        CHECK_FALSE(s.empirical_accuracy.has_value());
    }

    std::vector<int> misaligned = {0};
    CHECK_THROWS_WITH_AS(lf_stats(matrix, misaligned), doctest::Contains("misaligned"), Error);
}

TEST_CASE("lf_stats equals enumeration oracle on random matrices") {
    auto vocab = fixture_vocab();
    Rng rng(321);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 5 + rng.bounded(20), m = 2 + rng.bounded(5);
        LabelMatrix matrix;
        matrix.n = n;
        matrix.m = m;
        std::vector<std::vector<int>> dense(n, std::vector<int>(m, kAbstain));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (rng.real01() < 0.4) {
                    int y = int(rng.bounded(4));
                    dense[i][j] = y;
                    matrix.votes.push_back({std::uint32_t(i), std::uint32_t(j), std::uint32_t(y)});
                }
        std::vector<int> gold;
        for (std::size_t i = 0; i < n; ++i) gold.push_back(int(rng.bounded(4)));
        auto mine = lf_stats(matrix, gold);
        auto expected = oracle::stats_by_enumeration(dense, &gold);
        for (std::size_t j = 0; j < m; ++j) {
            CHECK(mine[j].votes == expected[j].votes);
            CHECK(mine[j].coverage == doctest::Approx(expected[j].coverage));
            CHECK(mine[j].overlap == doctest::Approx(expected[j].overlap));
            CHECK(mine[j].conflict == doctest::Approx(expected[j].conflict));
            CHECK(mine[j].empirical_accuracy.has_value() == expected[j].accuracy.has_value());
            if (expected[j].accuracy)
                CHECK(*mine[j].empirical_accuracy == doctest::Approx(*expected[j].accuracy));
        }
    }
}

TEST_CASE("sparse/dense agreement on a larger random corpus") {
    auto vocab = fixture_vocab();
    Rng rng(424242);
    std::vector<LabelingFunction> lfs;
    for (std::size_t j = 0; j < 30; ++j) lfs.push_back(random_lf(rng, vocab, j));
    std::vector<ColumnInstance> cols;
    const char* pool[] = {"ISBN 0-1", "1999", "John Smith", "alpha", "42", "x1", ""};
    for (std::size_t i = 0; i < 200; ++i) {
        std::vector<std::string> values;
        std::size_t cells = rng.bounded(6);
        for (std::size_t k = 0; k < cells; ++k) values.push_back(pool[rng.bounded(7)]);
        cols.push_back(column("c" + std::to_string(i), values));
    }
    auto matrix = apply_all(lfs, cols);
    auto dense = oracle::dense_apply(lfs, cols);
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> sparse;
    for (const auto& v : matrix.votes) sparse[{v.instance, v.lf}] = v.label;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        for (std::size_t j = 0; j < lfs.size(); ++j) {
            auto it = sparse.find({std::uint32_t(i), std::uint32_t(j)});
            int got = it == sparse.end() ? kAbstain : int(it->second);
            CHECK(got == dense[i][j]);
        }
    }
}
