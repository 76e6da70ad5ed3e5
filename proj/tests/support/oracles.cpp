#include "oracles.hpp"

#include <cctype>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace notemill::testing {

namespace {

[[noreturn]] void oracle_fail(const std::string& what)
{
    throw std::runtime_error("oracle: " + what);
}

} // namespace

OMPtr substitute_bindings(const PatNode& pat, const Bindings& b)
{
    switch (pat.kind) {
    case PatNode::Kind::exact:
        return pat.exact;
    case PatNode::Kind::slot: {
        const BoundValue* v = b.find(pat.slot_name);
        if (!v || v->is_sequence)
            oracle_fail("missing single binding for slot " + pat.slot_name);
        return v->single;
    }
    case PatNode::Kind::apply: {
        std::vector<OMPtr> args;
        for (const auto& a : pat.args) {
            if (a->kind == PatNode::Kind::slot && a->slot_kind == SlotKind::sequence) {
                const BoundValue* v = b.find(a->slot_name);
                if (!v || !v->is_sequence)
                    oracle_fail("missing sequence binding for slot " + a->slot_name);
                args.insert(args.end(), v->items.begin(), v->items.end());
            } else {
                args.push_back(substitute_bindings(*a, b));
            }
        }
        return make_apply(substitute_bindings(*pat.head, b), std::move(args));
    }
    case PatNode::Kind::bind: {
        std::vector<OMPtr> vars;
        for (const auto& v : pat.args)
            vars.push_back(substitute_bindings(*v, b));
        return make_bind(substitute_bindings(*pat.head, b), std::move(vars),
                         substitute_bindings(*pat.body, b));
    }
    }
    oracle_fail("unreachable pattern kind");
}

std::optional<SelectResult> linear_select(const NotationStore& store, const OMPtr& expr,
                                          const RenderContext& ctx, const SpecificityOrder& order)
{
    struct Candidate {
        const Notation* notation;
        const Rendering* rendering;
        Specificity spec;
        std::shared_ptr<const Bindings> bindings;
    };

    std::vector<Candidate> candidates;
    for (const auto& notation : store.notations()) {
        auto bindings = match_prototype(notation.prototype, expr);
        if (!bindings)
            continue;
        auto shared = std::make_shared<const Bindings>(std::move(*bindings));
        for (const auto& rendering : notation.renderings) {
            if (!eligible(rendering.constraint, ctx))
                continue;
            candidates.push_back({&notation, &rendering,
                                  specificity(rendering.constraint, ctx), shared});
        }
    }
    if (candidates.empty())
        return std::nullopt;

    Specificity best = candidates.front().spec;
    for (const auto& c : candidates)
        if (specificity_less(best, c.spec, order))
            best = c.spec;
    for (const auto& c : candidates)
        if (c.spec == best)
            return SelectResult{c.notation, c.rendering, c.bindings};
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Reverse grammar for the fuzz store.
//
//   expr     := operand (binop expr')*          precedence climbing
//   operand  := '-' operand | power
//   power    := postfix ('^' '{' expr '}')*
//   postfix  := primary '!'*
//   primary  := NUM | VAR | '\left(' expr '\right)'
//             | '\left|' expr '\right|' | '\gcd' '(' expr (',' expr)* ')'
//
// Binary operators: = (30), + - (100), \cdot / (200), all climbed
// left-associatively.

namespace {

struct Token {
    enum class Kind { number, variable, symbol, command, end };
    Kind kind = Kind::end;
    std::string text;
};

class Lexer {
public:
    explicit Lexer(std::string_view s) : s_(s) { advance(); }

    const Token& peek() const { return tok_; }

    Token take()
    {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance()
    {
        while (pos_ < s_.size() && s_[pos_] == ' ')
            ++pos_;
        if (pos_ >= s_.size()) {
            tok_ = {Token::Kind::end, ""};
            return;
        }
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
                ++pos_;
            tok_ = {Token::Kind::number, std::string(s_.substr(start, pos_ - start))};
            return;
        }
        if (std::islower(static_cast<unsigned char>(c))) {
            tok_ = {Token::Kind::variable, std::string(1, c)};
            ++pos_;
            return;
        }
        if (c == '\\') {
            std::size_t start = ++pos_;
            while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_])))
                ++pos_;
            if (pos_ == start)
                oracle_fail("lone backslash in latex output");
            tok_ = {Token::Kind::command, std::string(s_.substr(start, pos_ - start))};
            return;
        }
        tok_ = {Token::Kind::symbol, std::string(1, c)};
        ++pos_;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    Token tok_;
};

OMPtr op(const char* cd, const char* name) { return make_symbol(cd, name); }

OMPtr apply1(const char* cd, const char* name, OMPtr a)
{
    return make_apply(op(cd, name), {std::move(a)});
}

OMPtr apply2(const char* cd, const char* name, OMPtr a, OMPtr b)
{
    return make_apply(op(cd, name), {std::move(a), std::move(b)});
}

class FuzzParser {
public:
    explicit FuzzParser(std::string_view s) : lx_(s) {}

    OMPtr parse()
    {
        OMPtr e = parse_expr(0);
        if (lx_.peek().kind != Token::Kind::end)
            oracle_fail("trailing input after expression: " + lx_.peek().text);
        return e;
    }

private:
    struct BinOp {
        const char* name;
        int prec;
    };

    std::optional<BinOp> peek_binop()
    {
        const Token& t = lx_.peek();
        if (t.kind == Token::Kind::symbol) {
            if (t.text == "=")
                return BinOp{"eq", 30};
            if (t.text == "+")
                return BinOp{"plus", 100};
            if (t.text == "-")
                return BinOp{"minus", 100};
            if (t.text == "/")
                return BinOp{"divide", 200};
        }
        if (t.kind == Token::Kind::command && t.text == "cdot")
            return BinOp{"times", 200};
        return std::nullopt;
    }

    OMPtr parse_expr(int min_prec)
    {
        OMPtr lhs = parse_operand();
        for (;;) {
            auto binop = peek_binop();
            if (!binop || binop->prec < min_prec)
                return lhs;
            lx_.take();
            OMPtr rhs = parse_expr(binop->prec + 1);
            const char* cd = binop->prec == 30 ? "relation1" : "arith1";
            lhs = apply2(cd, binop->name, std::move(lhs), std::move(rhs));
        }
    }

    OMPtr parse_operand()
    {
        if (lx_.peek().kind == Token::Kind::symbol && lx_.peek().text == "-") {
            lx_.take();
            return apply1("arith1", "unary_minus", parse_operand());
        }
        return parse_power();
    }

    OMPtr parse_power()
    {
        OMPtr node = parse_postfix();
        while (lx_.peek().kind == Token::Kind::symbol && lx_.peek().text == "^") {
            lx_.take();
            expect_symbol("{");
            OMPtr e = parse_expr(0);
            expect_symbol("}");
            node = apply2("arith1", "power", std::move(node), std::move(e));
        }
        return node;
    }

    OMPtr parse_postfix()
    {
        OMPtr node = parse_primary();
        while (lx_.peek().kind == Token::Kind::symbol && lx_.peek().text == "!") {
            lx_.take();
            node = apply1("arith1", "factorial", std::move(node));
        }
        return node;
    }

    OMPtr parse_primary()
    {
        Token t = lx_.take();
        if (t.kind == Token::Kind::number)
            return make_integer(false, t.text);
        if (t.kind == Token::Kind::variable)
            return make_variable(t.text);
        if (t.kind == Token::Kind::command && t.text == "left") {
            Token open = lx_.take();
            if (open.kind != Token::Kind::symbol || (open.text != "(" && open.text != "|"))
                oracle_fail("unknown \\left fence: " + open.text);
            OMPtr inner = parse_expr(0);
            expect_command("right");
            expect_symbol(open.text == "(" ? ")" : open.text);
            if (open.text == "|")
                return apply1("arith1", "abs", std::move(inner));
            return inner;
        }
        if (t.kind == Token::Kind::command && t.text == "gcd") {
            expect_symbol("(");
            std::vector<OMPtr> args;
            args.push_back(parse_expr(0));
            while (lx_.peek().kind == Token::Kind::symbol && lx_.peek().text == ",") {
                lx_.take();
                args.push_back(parse_expr(0));
            }
            expect_symbol(")");
            return make_apply(op("arith1", "gcd"), std::move(args));
        }
        oracle_fail("unexpected token: " + (t.text.empty() ? "<end>" : t.text));
    }

    void expect_symbol(const std::string& s)
    {
        Token t = lx_.take();
        if (t.kind != Token::Kind::symbol || t.text != s)
            oracle_fail("expected '" + s + "', got '" + t.text + "'");
    }

    void expect_command(const std::string& s)
    {
        Token t = lx_.take();
        if (t.kind != Token::Kind::command || t.text != s)
            oracle_fail("expected \\" + s + ", got '" + t.text + "'");
    }

    Lexer lx_;
};

} // namespace

OMPtr parse_fuzz_latex(const std::string& s)
{
    return FuzzParser(s).parse();
}

OMPtr random_fuzz_expr(std::mt19937& rng, int depth)
{
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };

    if (depth <= 0 || pick(5) == 0) {
        if (pick(2) == 0)
            return make_integer(pick(1000));
        static const char* vars[] = {"x", "y", "z"};
        return make_variable(vars[pick(3)]);
    }

    switch (pick(10)) {
    case 0:
        return apply2("relation1", "eq", random_fuzz_expr(rng, depth - 1),
                      random_fuzz_expr(rng, depth - 1));
    case 1:
        return apply2("arith1", "plus", random_fuzz_expr(rng, depth - 1),
                      random_fuzz_expr(rng, depth - 1));
    case 2:
        return apply2("arith1", "minus", random_fuzz_expr(rng, depth - 1),
                      random_fuzz_expr(rng, depth - 1));
    case 3:
        return apply2("arith1", "times", random_fuzz_expr(rng, depth - 1),
                      random_fuzz_expr(rng, depth - 1));
    case 4:
        return apply2("arith1", "divide", random_fuzz_expr(rng, depth - 1),
                      random_fuzz_expr(rng, depth - 1));
    case 5:
        return apply2("arith1", "power", random_fuzz_expr(rng, depth - 1),
                      random_fuzz_expr(rng, depth - 1));
    case 6:
        return apply1("arith1", "unary_minus", random_fuzz_expr(rng, depth - 1));
    case 7:
        return apply1("arith1", "abs", random_fuzz_expr(rng, depth - 1));
    case 8:
        return apply1("arith1", "factorial", random_fuzz_expr(rng, depth - 1));
    default: {
        std::vector<OMPtr> args;
        int n = 1 + pick(3);
        for (int i = 0; i < n; ++i)
            args.push_back(random_fuzz_expr(rng, depth - 1));
        return make_apply(op("arith1", "gcd"), std::move(args));
    }
    }
}

// ---------------------------------------------------------------------------
// Structure fuzzers.

namespace {

std::string random_identifier(std::mt19937& rng)
{
    static const char* pool[] = {"x", "y", "lim", "a_1", "foo-bar", "Zeta", "_tmp", "n0"};
    return pool[std::uniform_int_distribution<std::size_t>(0, std::size(pool) - 1)(rng)];
}

std::string random_digits(std::mt19937& rng, int min_len, int max_len)
{
    int len = std::uniform_int_distribution<int>(min_len, max_len)(rng);
    std::string s;
    for (int i = 0; i < len; ++i)
        s += static_cast<char>('0' + std::uniform_int_distribution<int>(0, 9)(rng));
    return s;
}

std::string random_text(std::mt19937& rng)
{
    static const char* pool[] = {"", "hello", "a < b & c > d", "quote\"quote", "π ≈ 3,14",
                                 "line\nbreak", "tab\there", "]]>", "'"};
    return pool[std::uniform_int_distribution<std::size_t>(0, std::size(pool) - 1)(rng)];
}

OMPtr random_leaf(std::mt19937& rng)
{
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    switch (pick(5)) {
    case 0:
        return make_integer(pick(2) == 0, random_digits(rng, 1, 12));
    case 1: {
        bool with_frac = pick(2) == 0;
        return make_decimal(pick(2) == 0, random_digits(rng, 1, 6),
                            with_frac ? random_digits(rng, 1, 6) : "");
    }
    case 2:
        return make_variable(random_identifier(rng));
    case 3:
        return make_symbol(random_identifier(rng), random_identifier(rng));
    default:
        return make_string(random_text(rng));
    }
}

} // namespace

OMPtr random_om(std::mt19937& rng, int depth)
{
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };

    if (depth <= 0 || pick(3) == 0)
        return random_leaf(rng);

    if (pick(3) < 2) {
        std::vector<OMPtr> args;
        int n = pick(4);
        for (int i = 0; i < n; ++i)
            args.push_back(random_om(rng, depth - 1));
        return make_apply(random_om(rng, depth - 1), std::move(args));
    }

    std::vector<OMPtr> vars;
    int n = 1 + pick(3);
    for (int i = 0; i < n; ++i)
        vars.push_back(make_variable(random_identifier(rng)));
    return make_bind(random_om(rng, depth - 1), std::move(vars), random_om(rng, depth - 1));
}

Census random_census(std::mt19937& rng)
{
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };

    Census c;
    int n_sources = 1 + pick(4);
    for (int i = 0; i < n_sources; ++i) {
        Source s;
        s.key = "src-" + std::to_string(i);
        s.title = random_text(rng) + " title";
        s.culture = pick(2) == 0 ? "de" : "en-ee";
        if (pick(2) == 0)
            s.publisher_url = "https://example.org/" + std::to_string(pick(100));
        if (pick(3) == 0)
            s.download_url = "https://example.org/dl/" + std::to_string(pick(100));
        c.sources.push_back(std::move(s));
    }
    int n_obs = pick(7);
    for (int i = 0; i < n_obs; ++i) {
        Observation o;
        o.id = "obs-" + std::to_string(i);
        o.semantic = random_identifier(rng) + "/" + random_identifier(rng);
        o.culture = pick(2) == 0 ? "fr" : "ru";
        o.symbol_name = random_text(rng) + " sym";
        o.source_key = c.sources[pick(n_sources)].key;
        o.locator = "p. " + std::to_string(pick(500));
        o.image = "images/obs-" + std::to_string(i) + ".png";
        if (pick(2) == 0)
            o.unicode_repr = random_text(rng);
        if (pick(3) == 0)
            o.description = random_text(rng);
        c.observations.push_back(std::move(o));
    }
    return c;
}

} // namespace notemill::testing
