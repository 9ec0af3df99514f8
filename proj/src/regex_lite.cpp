#include "lakelabel/regex_lite.hpp"

#include "lakelabel/common.hpp"

#include <cctype>

namespace lakelabel {

namespace {
constexpr std::size_t kMaxRepeat = 512;
constexpr std::size_t kMaxStates = 100000;
} // namespace

// Recursive-descent parser building Thompson fragments directly into the
// owning RegexLite. A fragment is (entry state, exit state); exit has no
// outgoing edges until the caller wires it.
class RegexParserImpl {
public:
    RegexParserImpl(RegexLite& re, std::string_view pattern) : re_(re), p_(pattern) {}

    void parse() {
        auto [entry, exit] = parse_alternation();
        if (pos_ != p_.size()) fail("unmatched ')'");
        re_.start_ = re_.add_state();
        re_.accept_ = re_.add_state();
        re_.add_edge(re_.start_, {RegexLite::Edge::Epsilon, entry, 0});
        re_.add_edge(exit, {RegexLite::Edge::Epsilon, re_.accept_, 0});
    }

private:
    using Frag = std::pair<int, int>;

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error("regex error at position " + std::to_string(pos_) + ": " + msg);
    }

    bool eof() const { return pos_ >= p_.size(); }
    char peek() const { return p_[pos_]; }

    int new_state() {
        if (re_.states_.size() >= kMaxStates) fail("pattern too large");
        return re_.add_state();
    }

    Frag parse_alternation() {
        Frag first = parse_concat();
        if (eof() || peek() != '|') return first;
        int entry = new_state();
        int exit = new_state();
        re_.add_edge(entry, {RegexLite::Edge::Epsilon, first.first, 0});
        re_.add_edge(first.second, {RegexLite::Edge::Epsilon, exit, 0});
        while (!eof() && peek() == '|') {
            ++pos_;
            Frag alt = parse_concat();
            re_.add_edge(entry, {RegexLite::Edge::Epsilon, alt.first, 0});
            re_.add_edge(alt.second, {RegexLite::Edge::Epsilon, exit, 0});
        }
        return {entry, exit};
    }

    Frag parse_concat() {
        int entry = new_state();
        int tail = entry;
        while (!eof() && peek() != '|' && peek() != ')') {
            Frag piece = parse_repeat();
            re_.add_edge(tail, {RegexLite::Edge::Epsilon, piece.first, 0});
            tail = piece.second;
        }
        return {entry, tail};
    }

    Frag parse_repeat() {
        std::size_t atom_start = pos_;
        Frag atom = parse_atom();
        if (eof()) return atom;
        char c = peek();
        if (c == '*' || c == '+' || c == '?') {
            ++pos_;
            check_no_stacked_quantifier();
            if (c == '*') return star(atom);
            if (c == '+') return plus(atom);
            return optional(atom);
        }
        if (c == '{') {
            auto [lo, hi] = parse_bounds();
            check_no_stacked_quantifier();
            return counted(atom_start, atom, lo, hi);
        }
        return atom;
    }

    void check_no_stacked_quantifier() {
        if (!eof() && (peek() == '*' || peek() == '+' || peek() == '?' || peek() == '{'))
            fail("quantifier follows quantifier");
    }

    // Re-parses the atom source to get a fresh copy of its fragment.
    Frag clone_atom(std::size_t atom_start) {
        std::size_t save = pos_;
        pos_ = atom_start;
        Frag f = parse_atom();
        pos_ = save;
        return f;
    }

    Frag star(Frag body) {
        int entry = new_state();
        int exit = new_state();
        re_.add_edge(entry, {RegexLite::Edge::Epsilon, body.first, 0});
        re_.add_edge(entry, {RegexLite::Edge::Epsilon, exit, 0});
        re_.add_edge(body.second, {RegexLite::Edge::Epsilon, body.first, 0});
        re_.add_edge(body.second, {RegexLite::Edge::Epsilon, exit, 0});
        return {entry, exit};
    }

    Frag plus(Frag body) {
        int exit = new_state();
        re_.add_edge(body.second, {RegexLite::Edge::Epsilon, body.first, 0});
        re_.add_edge(body.second, {RegexLite::Edge::Epsilon, exit, 0});
        return {body.first, exit};
    }

    Frag optional(Frag atom) {
        int entry = new_state();
        int exit = new_state();
        re_.add_edge(entry, {RegexLite::Edge::Epsilon, atom.first, 0});
        re_.add_edge(entry, {RegexLite::Edge::Epsilon, exit, 0});
        re_.add_edge(atom.second, {RegexLite::Edge::Epsilon, exit, 0});
        return {entry, exit};
    }

    std::pair<std::size_t, std::size_t> parse_bounds() {
        ++pos_; // '{'
        std::size_t lo = parse_count();
        std::size_t hi = lo;
        bool unbounded = false;
        if (!eof() && peek() == ',') {
            ++pos_;
            if (!eof() && peek() == '}') {
                unbounded = true;
            } else {
                hi = parse_count();
            }
        }
        if (eof() || peek() != '}') fail("expected '}' in repetition");
        ++pos_;
        if (!unbounded && hi < lo) fail("repetition bounds out of order");
        if (unbounded) hi = SIZE_MAX;
        return {lo, hi};
    }

    std::size_t parse_count() {
        if (eof() || !std::isdigit(static_cast<unsigned char>(peek()))) fail("expected digit in repetition");
        std::size_t v = 0;
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
            v = v * 10 + static_cast<std::size_t>(peek() - '0');
            if (v > kMaxRepeat) fail("repetition bound too large");
            ++pos_;
        }
        return v;
    }

    Frag counted(std::size_t atom_start, Frag first_copy, std::size_t lo, std::size_t hi) {
        int entry = new_state();
        int exit = new_state();
        int tail = entry;
        std::size_t mandatory = lo;
        bool unbounded = hi == SIZE_MAX;
        std::size_t optional_copies = unbounded ? 0 : hi - lo;

        bool used_first = false;
        auto next_copy = [&]() -> Frag {
            if (!used_first) {
                used_first = true;
                return first_copy;
            }
            return clone_atom(atom_start);
        };

        for (std::size_t i = 0; i < mandatory; ++i) {
            Frag f = next_copy();
            re_.add_edge(tail, {RegexLite::Edge::Epsilon, f.first, 0});
            tail = f.second;
        }
        if (unbounded) {
            Frag f = next_copy(); // loop body appended after the mandatory run
            re_.add_edge(tail, {RegexLite::Edge::Epsilon, exit, 0});
            re_.add_edge(tail, {RegexLite::Edge::Epsilon, f.first, 0});
            re_.add_edge(f.second, {RegexLite::Edge::Epsilon, f.first, 0});
            re_.add_edge(f.second, {RegexLite::Edge::Epsilon, exit, 0});
            return {entry, exit};
        }
        for (std::size_t i = 0; i < optional_copies; ++i) {
            Frag f = next_copy();
            re_.add_edge(tail, {RegexLite::Edge::Epsilon, exit, 0});
            re_.add_edge(tail, {RegexLite::Edge::Epsilon, f.first, 0});
            tail = f.second;
        }
        re_.add_edge(tail, {RegexLite::Edge::Epsilon, exit, 0});
        return {entry, exit};
    }

    Frag parse_atom() {
        if (eof()) fail("expected atom");
        char c = peek();
        switch (c) {
            case '(': {
                if (pos_ + 1 < p_.size() && p_[pos_ + 1] == '?') {
                    ++pos_;
                    fail("lookaround and group modifiers are not supported");
                }
                ++pos_;
                Frag inner = parse_alternation();
                if (eof() || peek() != ')') fail("expected ')'");
                ++pos_;
                return inner;
            }
            case ')': fail("unexpected ')'");
            case '[': return parse_class();
            case '^': {
                ++pos_;
                return assertion(RegexLite::Edge::AssertBegin);
            }
            case '$': {
                ++pos_;
                return assertion(RegexLite::Edge::AssertEnd);
            }
            case '*':
            case '+':
            case '?': fail("quantifier with nothing to repeat");
            case '{': fail("repetition with nothing to repeat");
            case '.': {
                ++pos_;
                std::bitset<256> any;
                any.set();
                any.reset(static_cast<std::size_t>('\n'));
                return char_frag(any);
            }
            case '\\': return parse_escape();
            default: {
                ++pos_;
                std::bitset<256> one;
                one.set(static_cast<unsigned char>(c));
                return char_frag(one);
            }
        }
    }

    Frag assertion(RegexLite::Edge::Kind kind) {
        int entry = new_state();
        int exit = new_state();
        re_.add_edge(entry, {kind, exit, 0});
        return {entry, exit};
    }

    Frag char_frag(const std::bitset<256>& cls) {
        int entry = new_state();
        int exit = new_state();
        re_.classes_.push_back(cls);
        re_.add_edge(entry, {RegexLite::Edge::Char, exit,
                             static_cast<std::uint32_t>(re_.classes_.size() - 1)});
        return {entry, exit};
    }

    static void fill_digit(std::bitset<256>& b, bool negate) {
        for (int c = 0; c < 256; ++c) {
            bool in = c >= '0' && c <= '9';
            if (in != negate) b.set(static_cast<std::size_t>(c));
        }
    }
    static void fill_word(std::bitset<256>& b, bool negate) {
        for (int c = 0; c < 256; ++c) {
            bool in = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
            if (in != negate) b.set(static_cast<std::size_t>(c));
        }
    }
    static void fill_space(std::bitset<256>& b, bool negate) {
        for (int c = 0; c < 256; ++c) {
            bool in = c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
            if (in != negate) b.set(static_cast<std::size_t>(c));
        }
    }

    // Returns true if the escape is a class shorthand, false for a literal.
    bool escape_class(char c, std::bitset<256>& out) {
        switch (c) {
            case 'd': fill_digit(out, false); return true;
            case 'D': fill_digit(out, true); return true;
            case 'w': fill_word(out, false); return true;
            case 'W': fill_word(out, true); return true;
            case 's': fill_space(out, false); return true;
            case 'S': fill_space(out, true); return true;
            default: return false;
        }
    }

    char escape_literal(char c) {
        switch (c) {
            case 't': return '\t';
            case 'n': return '\n';
            case 'r': return '\r';
            default:
                if (std::isdigit(static_cast<unsigned char>(c)))
                    fail("backreferences are not supported");
                if (std::isalpha(static_cast<unsigned char>(c)))
                    fail(std::string("unknown escape '\\") + c + "'");
                return c; // escaped punctuation stands for itself
        }
    }

    Frag parse_escape() {
        ++pos_; // backslash
        if (eof()) fail("dangling escape");
        char c = peek();
        ++pos_;
        std::bitset<256> cls;
        if (escape_class(c, cls)) return char_frag(cls);
        std::size_t save = pos_ - 1;
        pos_ = save; // escape_literal may fail; report at the escape char
        char lit = escape_literal(c);
        pos_ = save + 1;
        std::bitset<256> one;
        one.set(static_cast<unsigned char>(lit));
        return char_frag(one);
    }

    Frag parse_class() {
        std::size_t open = pos_;
        ++pos_; // '['
        bool negate = false;
        if (!eof() && peek() == '^') {
            negate = true;
            ++pos_;
        }
        std::bitset<256> cls;
        bool first = true;
        while (true) {
            if (eof()) {
                pos_ = open;
                fail("unterminated character class");
            }
            char c = peek();
            if (c == ']' && !first) break;
            first = false;
            unsigned char lo;
            bool lo_is_class = false;
            if (c == '\\') {
                ++pos_;
                if (eof()) fail("dangling escape in character class");
                char e = peek();
                ++pos_;
                std::bitset<256> sub;
                if (escape_class(e, sub)) {
                    cls |= sub;
                    lo_is_class = true;
                    lo = 0;
                } else {
                    std::size_t save = pos_ - 1;
                    pos_ = save;
                    lo = static_cast<unsigned char>(escape_literal(e));
                    pos_ = save + 1;
                }
            } else {
                lo = static_cast<unsigned char>(c);
                ++pos_;
            }
            if (!lo_is_class && !eof() && peek() == '-' && pos_ + 1 < p_.size() && p_[pos_ + 1] != ']') {
                ++pos_; // '-'
                char hc = peek();
                unsigned char hi;
                if (hc == '\\') {
                    ++pos_;
                    if (eof()) fail("dangling escape in character class");
                    char e = peek();
                    std::bitset<256> sub;
                    if (escape_class(e, sub)) fail("class shorthand cannot bound a range");
                    std::size_t save = pos_;
                    hi = static_cast<unsigned char>(escape_literal(e));
                    pos_ = save + 1;
                } else {
                    hi = static_cast<unsigned char>(hc);
                    ++pos_;
                }
                if (hi < lo) fail("character range out of order");
                for (unsigned int v = lo; v <= hi; ++v) cls.set(v);
            } else if (!lo_is_class) {
                cls.set(lo);
            }
        }
        ++pos_; // ']'
        if (negate) cls.flip();
        return char_frag(cls);
    }

    RegexLite& re_;
    std::string_view p_;
    std::size_t pos_ = 0;
};

RegexLite RegexLite::compile(std::string_view pattern) {
    RegexLite re;
    re.pattern_ = std::string(pattern);
    RegexParserImpl parser(re, pattern);
    parser.parse();
    return re;
}

void RegexLite::closure(std::vector<int>& worklist, std::vector<char>& in_set,
                        bool at_begin, bool at_end) const {
    for (std::size_t w = 0; w < worklist.size(); ++w) {
        int s = worklist[w];
        for (const Edge& e : states_[static_cast<std::size_t>(s)].edges) {
            bool pass = false;
            switch (e.kind) {
                case Edge::Epsilon: pass = true; break;
                case Edge::AssertBegin: pass = at_begin; break;
                case Edge::AssertEnd: pass = at_end; break;
                case Edge::Char: continue;
            }
            if (pass && !in_set[static_cast<std::size_t>(e.target)]) {
                in_set[static_cast<std::size_t>(e.target)] = 1;
                worklist.push_back(e.target);
            }
        }
    }
}

bool RegexLite::run(std::string_view text, bool anchored) const {
    const std::size_t n = text.size();
    std::vector<char> current(states_.size(), 0);
    std::vector<int> work;
    work.reserve(states_.size());

    auto inject_start = [&](std::vector<char>& set, std::vector<int>& wl) {
        if (!set[static_cast<std::size_t>(start_)]) {
            set[static_cast<std::size_t>(start_)] = 1;
            wl.push_back(start_);
        }
    };

    inject_start(current, work);
    closure(work, current, /*at_begin=*/true, /*at_end=*/n == 0);
    if (current[static_cast<std::size_t>(accept_)] && (!anchored || n == 0)) return true;

    for (std::size_t i = 0; i < n; ++i) {
        std::vector<char> next(states_.size(), 0);
        std::vector<int> next_work;
        unsigned char ch = static_cast<unsigned char>(text[i]);
        for (std::size_t s = 0; s < states_.size(); ++s) {
            if (!current[s]) continue;
            for (const Edge& e : states_[s].edges) {
                if (e.kind != Edge::Char) continue;
                if (!classes_[e.char_class].test(ch)) continue;
                if (!next[static_cast<std::size_t>(e.target)]) {
                    next[static_cast<std::size_t>(e.target)] = 1;
                    next_work.push_back(e.target);
                }
            }
        }
        if (!anchored) inject_start(next, next_work);
        bool at_end = i + 1 == n;
        closure(next_work, next, /*at_begin=*/false, at_end);
        current = std::move(next);
        if (!anchored && current[static_cast<std::size_t>(accept_)]) return true;
    }
    return current[static_cast<std::size_t>(accept_)];
}

bool RegexLite::match_full(std::string_view text) const { return run(text, /*anchored=*/true); }

bool RegexLite::search(std::string_view text) const { return run(text, /*anchored=*/false); }

} // namespace lakelabel
