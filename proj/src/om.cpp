#include "notemill/om.hpp"

#include <cctype>
#include <utility>

#include "notemill/xml.hpp"

namespace notemill {

bool is_identifier(const std::string& s)
{
    if (s.empty())
        return false;
    char c0 = s[0];
    if (!std::isalpha(static_cast<unsigned char>(c0)) && c0 != '_')
        return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
            return false;
    return true;
}

namespace {

bool all_digits(const std::string& s)
{
    if (s.empty())
        return false;
    for (char c : s)
        if (c < '0' || c > '9')
            return false;
    return true;
}

std::string strip_leading_zeros(const std::string& digits)
{
    std::size_t i = 0;
    while (i + 1 < digits.size() && digits[i] == '0')
        ++i;
    return digits.substr(i);
}

} // namespace

bool om_equal(const OMObject& a, const OMObject& b)
{
    if (a.kind != b.kind)
        return false;
    switch (a.kind) {
    case OMKind::integer:
        return a.negative == b.negative && a.int_digits == b.int_digits;
    case OMKind::decimal:
        return a.negative == b.negative && a.int_digits == b.int_digits && a.frac_digits == b.frac_digits;
    case OMKind::variable:
        return a.name == b.name;
    case OMKind::symbol:
        return a.cd == b.cd && a.name == b.name;
    case OMKind::string:
        return a.str == b.str;
    case OMKind::apply: {
        if (a.args.size() != b.args.size() || !om_equal(*a.head, *b.head))
            return false;
        for (std::size_t i = 0; i < a.args.size(); ++i)
            if (!om_equal(*a.args[i], *b.args[i]))
                return false;
        return true;
    }
    case OMKind::bind: {
        if (a.args.size() != b.args.size() || !om_equal(*a.head, *b.head))
            return false;
        for (std::size_t i = 0; i < a.args.size(); ++i)
            if (!om_equal(*a.args[i], *b.args[i]))
                return false;
        return om_equal(*a.body, *b.body);
    }
    }
    return false;
}

OMPtr make_integer(long long value)
{
    bool neg = value < 0;
    // Avoids overflow on LLONG_MIN by peeling the last digit first.
    unsigned long long mag = neg ? (static_cast<unsigned long long>(-(value + 1)) + 1ULL)
                                 : static_cast<unsigned long long>(value);
    return make_integer(neg, std::to_string(mag));
}

OMPtr make_integer(bool negative, const std::string& digits)
{
    if (!all_digits(digits))
        throw std::invalid_argument("integer digits must be nonempty and 0-9");
    auto node = std::make_shared<OMObject>();
    node->kind = OMKind::integer;
    node->int_digits = strip_leading_zeros(digits);
    node->negative = negative && node->int_digits != "0";
    return node;
}

OMPtr make_decimal(bool negative, const std::string& int_digits, const std::string& frac_digits)
{
    if (!all_digits(int_digits))
        throw std::invalid_argument("decimal integer part must be nonempty and 0-9");
    for (char c : frac_digits)
        if (c < '0' || c > '9')
            throw std::invalid_argument("decimal fraction part must be 0-9");
    auto node = std::make_shared<OMObject>();
    node->kind = OMKind::decimal;
    node->negative = negative;
    node->int_digits = int_digits;
    node->frac_digits = frac_digits;
    return node;
}

OMPtr make_variable(const std::string& name)
{
    if (!is_identifier(name))
        throw std::invalid_argument("bad variable name: " + name);
    auto node = std::make_shared<OMObject>();
    node->kind = OMKind::variable;
    node->name = name;
    return node;
}

OMPtr make_symbol(const std::string& cd, const std::string& name)
{
    if (!is_identifier(cd))
        throw std::invalid_argument("bad content dictionary name: " + cd);
    if (!is_identifier(name))
        throw std::invalid_argument("bad symbol name: " + name);
    auto node = std::make_shared<OMObject>();
    node->kind = OMKind::symbol;
    node->cd = cd;
    node->name = name;
    return node;
}

OMPtr make_string(const std::string& value)
{
    auto node = std::make_shared<OMObject>();
    node->kind = OMKind::string;
    node->str = value;
    return node;
}

OMPtr make_apply(OMPtr head, std::vector<OMPtr> args)
{
    if (!head)
        throw std::invalid_argument("apply needs a head");
    for (const auto& a : args)
        if (!a)
            throw std::invalid_argument("apply argument is null");
    auto node = std::make_shared<OMObject>();
    node->kind = OMKind::apply;
    node->head = std::move(head);
    node->args = std::move(args);
    return node;
}

OMPtr make_bind(OMPtr binder, std::vector<OMPtr> vars, OMPtr body)
{
    if (!binder || !body)
        throw std::invalid_argument("bind needs a binder and a body");
    if (vars.empty())
        throw std::invalid_argument("bind needs at least one bound variable");
    for (const auto& v : vars)
        if (!v || v->kind != OMKind::variable)
            throw std::invalid_argument("bound variables must be variables");
    auto node = std::make_shared<OMObject>();
    node->kind = OMKind::bind;
    node->head = std::move(binder);
    node->args = std::move(vars);
    node->body = std::move(body);
    return node;
}

ParseError::ParseError(int line_, int col_, const std::string& reason_)
    : std::runtime_error(std::to_string(line_) + ":" + std::to_string(col_) + ": " + reason_),
      line(line_), col(col_), reason(reason_)
{
}

namespace {

[[noreturn]] void om_fail(const XmlNode& at, const std::string& reason)
{
    throw ParseError(at.line, at.col, reason);
}

std::string trim(const std::string& s)
{
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return s.substr(b, e - b);
}

std::string element_text(const XmlNode& el)
{
    std::string out;
    for (const auto& child : el.children) {
        if (child.kind != XmlNode::Kind::text)
            om_fail(child, "unexpected child element in <" + el.tag + ">");
        out += child.text;
    }
    return out;
}

const std::string& required_attr(const XmlNode& el, const char* name)
{
    const std::string* v = el.attr(name);
    if (!v)
        om_fail(el, "<" + el.tag + "> requires attribute " + name);
    return *v;
}

std::vector<const XmlNode*> element_children(const XmlNode& el)
{
    std::vector<const XmlNode*> out;
    for (const auto& child : el.children) {
        if (child.kind == XmlNode::Kind::element) {
            out.push_back(&child);
        } else if (!child.is_ws_text()) {
            om_fail(child, "unexpected text inside <" + el.tag + ">");
        }
    }
    return out;
}

// "-12" or "012.50"; returns (negative, int digits, frac digits). frac stays
// empty when no point is present. Digit strings keep their written form.
struct DecParts {
    bool negative = false;
    std::string int_digits;
    std::string frac_digits;
};

DecParts split_decimal(const XmlNode& at, const std::string& s)
{
    DecParts p;
    std::size_t i = 0;
    if (i < s.size() && s[i] == '-') {
        p.negative = true;
        ++i;
    }
    std::size_t int_start = i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9')
        ++i;
    p.int_digits = s.substr(int_start, i - int_start);
    if (p.int_digits.empty())
        om_fail(at, "bad decimal literal: " + s);
    if (i < s.size() && s[i] == '.') {
        ++i;
        std::size_t frac_start = i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9')
            ++i;
        p.frac_digits = s.substr(frac_start, i - frac_start);
        if (p.frac_digits.empty())
            om_fail(at, "bad decimal literal: " + s);
    }
    if (i != s.size())
        om_fail(at, "bad decimal literal: " + s);
    return p;
}

OMPtr object_from_xml(const XmlNode& el)
{
    if (el.tag == "OMI") {
        std::string v = trim(element_text(el));
        bool neg = false;
        if (!v.empty() && v[0] == '-') {
            neg = true;
            v.erase(0, 1);
        }
        if (!all_digits(v))
            om_fail(el, "bad integer literal in <OMI>");
        return make_integer(neg, v);
    }
    if (el.tag == "OMF") {
        if (el.attr("hex"))
            om_fail(el, "<OMF> hex encoding is not supported");
        const std::string& dec = required_attr(el, "dec");
        DecParts p = split_decimal(el, dec);
        return make_decimal(p.negative, p.int_digits, p.frac_digits);
    }
    if (el.tag == "OMV") {
        const std::string& name = required_attr(el, "name");
        if (!is_identifier(name))
            om_fail(el, "bad variable name: " + name);
        return make_variable(name);
    }
    if (el.tag == "OMS") {
        const std::string& cd = required_attr(el, "cd");
        const std::string& name = required_attr(el, "name");
        if (!is_identifier(cd) || !is_identifier(name))
            om_fail(el, "bad symbol reference " + cd + "/" + name);
        return make_symbol(cd, name);
    }
    if (el.tag == "OMSTR") {
        return make_string(element_text(el));
    }
    if (el.tag == "OMA") {
        auto kids = element_children(el);
        if (kids.empty())
            om_fail(el, "<OMA> must contain a head");
        OMPtr head = object_from_xml(*kids[0]);
        std::vector<OMPtr> args;
        for (std::size_t i = 1; i < kids.size(); ++i)
            args.push_back(object_from_xml(*kids[i]));
        return make_apply(std::move(head), std::move(args));
    }
    if (el.tag == "OMBIND") {
        auto kids = element_children(el);
        if (kids.size() != 3)
            om_fail(el, "<OMBIND> must contain binder, <OMBVAR>, body");
        OMPtr binder = object_from_xml(*kids[0]);
        if (kids[1]->tag != "OMBVAR")
            om_fail(*kids[1], "second <OMBIND> child must be <OMBVAR>");
        std::vector<OMPtr> vars;
        for (const XmlNode* v : element_children(*kids[1])) {
            if (v->tag != "OMV")
                om_fail(*v, "<OMBVAR> may only contain <OMV>");
            vars.push_back(object_from_xml(*v));
        }
        if (vars.empty())
            om_fail(*kids[1], "<OMBVAR> must contain at least one variable");
        OMPtr body = object_from_xml(*kids[2]);
        return make_bind(std::move(binder), std::move(vars), std::move(body));
    }
    om_fail(el, "unknown OpenMath element <" + el.tag + ">");
}

} // namespace

OMPtr parse_om(const std::string& xml_text)
{
    XmlNode root;
    try {
        root = parse_xml(xml_text);
    } catch (const XmlError& e) {
        throw ParseError(e.line, e.col, e.reason);
    }
    if (root.tag != "OMOBJ")
        om_fail(root, "root element must be <OMOBJ>");
    auto kids = element_children(root);
    if (kids.size() != 1)
        om_fail(root, "<OMOBJ> must contain exactly one object");
    return object_from_xml(*kids[0]);
}

OMPtr om_from_xml(const XmlNode& element)
{
    return object_from_xml(element);
}

namespace {

std::string decimal_literal(const OMObject& d)
{
    std::string out;
    if (d.negative)
        out += '-';
    out += d.int_digits;
    if (!d.frac_digits.empty()) {
        out += '.';
        out += d.frac_digits;
    }
    return out;
}

void serialize_object(const OMObject& o, std::string& out)
{
    switch (o.kind) {
    case OMKind::integer:
        out += "<OMI>";
        if (o.negative)
            out += '-';
        out += o.int_digits;
        out += "</OMI>";
        return;
    case OMKind::decimal:
        out += "<OMF dec=\"";
        out += decimal_literal(o);
        out += "\"/>";
        return;
    case OMKind::variable:
        out += "<OMV name=\"";
        out += xml_escape_attr(o.name);
        out += "\"/>";
        return;
    case OMKind::symbol:
        out += "<OMS cd=\"";
        out += xml_escape_attr(o.cd);
        out += "\" name=\"";
        out += xml_escape_attr(o.name);
        out += "\"/>";
        return;
    case OMKind::string:
        out += "<OMSTR>";
        out += xml_escape_text(o.str);
        out += "</OMSTR>";
        return;
    case OMKind::apply:
        out += "<OMA>";
        serialize_object(*o.head, out);
        for (const auto& a : o.args)
            serialize_object(*a, out);
        out += "</OMA>";
        return;
    case OMKind::bind:
        out += "<OMBIND>";
        serialize_object(*o.head, out);
        out += "<OMBVAR>";
        for (const auto& v : o.args)
            serialize_object(*v, out);
        out += "</OMBVAR>";
        serialize_object(*o.body, out);
        out += "</OMBIND>";
        return;
    }
}

} // namespace

std::string serialize_om(const OMPtr& obj)
{
    std::string out = "<OMOBJ>";
    serialize_object(*obj, out);
    out += "</OMOBJ>";
    return out;
}

namespace {

struct CompactCursor {
    const std::string& s;
    std::size_t pos = 0;
    int line = 1;
    int col = 1;

    bool eof() const { return pos >= s.size(); }
    char peek() const { return s[pos]; }

    char advance()
    {
        char c = s[pos++];
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        return c;
    }

    void skip_ws()
    {
        while (!eof() && std::isspace(static_cast<unsigned char>(peek())))
            advance();
    }

    void expect(char c)
    {
        skip_ws();
        if (eof() || peek() != c)
            fail(std::string("expected '") + c + "'");
        advance();
    }

    bool accept(char c)
    {
        skip_ws();
        if (!eof() && peek() == c) {
            advance();
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& reason) const { throw ParseError(line, col, reason); }
};

std::string compact_ident(CompactCursor& cur)
{
    cur.skip_ws();
    std::string out;
    while (!cur.eof()) {
        char c = cur.peek();
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
            break;
        out.push_back(cur.advance());
    }
    if (!is_identifier(out))
        cur.fail("expected identifier");
    return out;
}

std::string compact_digits(CompactCursor& cur)
{
    std::string out;
    while (!cur.eof() && cur.peek() >= '0' && cur.peek() <= '9')
        out.push_back(cur.advance());
    if (out.empty())
        cur.fail("expected digits");
    return out;
}

OMPtr compact_expr(CompactCursor& cur);

OMPtr compact_variable(CompactCursor& cur)
{
    cur.expect('$');
    return make_variable(compact_ident(cur));
}

std::vector<OMPtr> compact_arg_list(CompactCursor& cur)
{
    std::vector<OMPtr> args;
    if (cur.accept(')'))
        return args;
    args.push_back(compact_expr(cur));
    while (cur.accept(','))
        args.push_back(compact_expr(cur));
    cur.expect(')');
    return args;
}

OMPtr compact_expr(CompactCursor& cur)
{
    cur.skip_ws();
    if (cur.eof())
        cur.fail("unexpected end of input");
    char c = cur.peek();

    if (c == '$')
        return compact_variable(cur);

    if (c == '"') {
        cur.advance();
        std::string out;
        while (true) {
            if (cur.eof())
                cur.fail("unterminated string literal");
            char d = cur.advance();
            if (d == '"')
                return make_string(out);
            if (d == '\\') {
                if (cur.eof())
                    cur.fail("unterminated escape");
                char e = cur.advance();
                if (e != '"' && e != '\\')
                    cur.fail("unknown escape in string literal");
                out.push_back(e);
            } else {
                out.push_back(d);
            }
        }
    }

    if (c == '#') {
        cur.advance();
        bool neg = false;
        if (!cur.eof() && cur.peek() == '-') {
            neg = true;
            cur.advance();
        }
        std::string int_digits = compact_digits(cur);
        std::string frac_digits;
        if (!cur.eof() && cur.peek() == '.') {
            cur.advance();
            frac_digits = compact_digits(cur);
        }
        return make_decimal(neg, int_digits, frac_digits);
    }

    if (c == '-' || (c >= '0' && c <= '9')) {
        bool neg = c == '-';
        if (neg)
            cur.advance();
        return make_integer(neg, compact_digits(cur));
    }

    std::string first = compact_ident(cur);

    if (first == "bind" && cur.accept('(')) {
        std::string cd = compact_ident(cur);
        cur.expect('/');
        std::string name = compact_ident(cur);
        OMPtr binder = make_symbol(cd, name);
        cur.expect(',');
        cur.expect('[');
        std::vector<OMPtr> vars;
        vars.push_back(compact_variable(cur));
        while (cur.accept(','))
            vars.push_back(compact_variable(cur));
        cur.expect(']');
        cur.expect(',');
        OMPtr body = compact_expr(cur);
        cur.expect(')');
        return make_bind(std::move(binder), std::move(vars), std::move(body));
    }

    cur.expect('/');
    std::string name = compact_ident(cur);
    OMPtr sym = make_symbol(first, name);
    if (cur.accept('('))
        return make_apply(std::move(sym), compact_arg_list(cur));
    return sym;
}

} // namespace

OMPtr parse_compact(const std::string& input)
{
    CompactCursor cur{input};
    OMPtr result = compact_expr(cur);
    cur.skip_ws();
    if (!cur.eof())
        cur.fail("trailing input after expression");
    return result;
}

} // namespace notemill
