#pragma once

#include <bitset>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace lakelabel {

// Restricted regular-expression dialect: literals, escapes (\d \D \w \W
// \s \S \t \n \r and escaped punctuation), character classes with ranges
// and negation, '.', the quantifiers * + ? {m} {m,} {m,n}, alternation,
// grouping and the anchors ^ $. No backreferences, no lookaround, no lazy
// quantifiers. Compiled to a Thompson NFA; matching is linear in
// pattern-size x input-size.
class RegexLite {
public:
    // Throws Error("regex error at position N: ...") on dialect violations.
    static RegexLite compile(std::string_view pattern);

    // Whole-string match.
    bool match_full(std::string_view text) const;
    // Match anywhere in the string.
    bool search(std::string_view text) const;

    const std::string& pattern() const { return pattern_; }

private:
    struct Edge {
        enum Kind { Epsilon, Char, AssertBegin, AssertEnd } kind = Epsilon;
        int target = -1;
        std::uint32_t char_class = 0; // index into classes_ when kind == Char
    };
    struct State {
        std::vector<Edge> edges;
    };

    RegexLite() = default;

    void add_edge(int from, Edge e) { states_[static_cast<std::size_t>(from)].edges.push_back(e); }
    int add_state() {
        states_.emplace_back();
        return static_cast<int>(states_.size()) - 1;
    }

    bool run(std::string_view text, bool anchored) const;
    void closure(std::vector<int>& worklist, std::vector<char>& in_set, bool at_begin, bool at_end) const;

    std::string pattern_;
    std::vector<State> states_;
    std::vector<std::bitset<256>> classes_;
    int start_ = -1;
    int accept_ = -1;

    friend class RegexParserImpl;
};

} // namespace lakelabel
