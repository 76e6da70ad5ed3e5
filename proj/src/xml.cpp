#include "notemill/xml.hpp"

#include <cctype>

namespace notemill {

XmlNode XmlNode::elem(std::string tag)
{
    XmlNode n;
    n.kind = Kind::element;
    n.tag = std::move(tag);
    return n;
}

XmlNode XmlNode::text_node(std::string text)
{
    XmlNode n;
    n.kind = Kind::text;
    n.text = std::move(text);
    return n;
}

XmlNode XmlNode::comment(std::string text)
{
    XmlNode n;
    n.kind = Kind::comment;
    n.text = std::move(text);
    return n;
}

const std::string* XmlNode::attr(const std::string& name) const
{
    for (const auto& [k, v] : attrs)
        if (k == name)
            return &v;
    return nullptr;
}

bool XmlNode::is_ws_text() const
{
    if (kind != Kind::text)
        return false;
    for (char c : text)
        if (c != ' ' && c != '\t' && c != '\n' && c != '\r')
            return false;
    return true;
}

XmlError::XmlError(int line_, int col_, const std::string& reason_)
    : std::runtime_error("xml:" + std::to_string(line_) + ":" + std::to_string(col_) + ": " + reason_),
      line(line_), col(col_), reason(reason_)
{
}

namespace {

struct Cursor {
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

    bool starts_with(const char* lit) const { return s.compare(pos, std::char_traits<char>::length(lit), lit) == 0; }

    void expect(char c, const char* what)
    {
        if (eof() || peek() != c)
            fail(std::string("expected ") + what);
        advance();
    }

    [[noreturn]] void fail(const std::string& reason) const { throw XmlError(line, col, reason); }
};

bool is_name_start(char c)
{
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':';
}

bool is_name_char(char c)
{
    return is_name_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.';
}

void skip_ws(Cursor& cur)
{
    while (!cur.eof()) {
        char c = cur.peek();
        if (c != ' ' && c != '\t' && c != '\n' && c != '\r')
            break;
        cur.advance();
    }
}

std::string read_name(Cursor& cur)
{
    if (cur.eof() || !is_name_start(cur.peek()))
        cur.fail("expected name");
    std::string out;
    while (!cur.eof() && is_name_char(cur.peek()))
        out.push_back(cur.advance());
    return out;
}

void append_utf8(std::string& out, unsigned long cp, Cursor& cur)
{
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
        cur.fail("character reference out of range");
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Resolves &name; and &#...; at the cursor, which sits just past '&'.
void read_entity(Cursor& cur, std::string& out)
{
    std::string name;
    while (!cur.eof() && cur.peek() != ';') {
        name.push_back(cur.advance());
        if (name.size() > 10)
            cur.fail("unterminated entity reference");
    }
    if (cur.eof())
        cur.fail("unterminated entity reference");
    cur.advance();   // ';'

    if (name == "lt") {
        out.push_back('<');
    } else if (name == "gt") {
        out.push_back('>');
    } else if (name == "amp") {
        out.push_back('&');
    } else if (name == "apos") {
        out.push_back('\'');
    } else if (name == "quot") {
        out.push_back('"');
    } else if (!name.empty() && name[0] == '#') {
        std::size_t i = 1;
        int base = 10;
        if (i < name.size() && (name[i] == 'x' || name[i] == 'X')) {
            base = 16;
            ++i;
        }
        if (i >= name.size())
            cur.fail("empty character reference");
        unsigned long cp = 0;
        for (; i < name.size(); ++i) {
            char c = name[i];
            int d;
            if (c >= '0' && c <= '9')
                d = c - '0';
            else if (base == 16 && c >= 'a' && c <= 'f')
                d = c - 'a' + 10;
            else if (base == 16 && c >= 'A' && c <= 'F')
                d = c - 'A' + 10;
            else
                cur.fail("bad character reference");
            cp = cp * base + static_cast<unsigned long>(d);
            if (cp > 0x10FFFF)
                cur.fail("character reference out of range");
        }
        append_utf8(out, cp, cur);
    } else {
        cur.fail("unknown entity &" + name + ";");
    }
}

std::string read_attr_value(Cursor& cur)
{
    if (cur.eof() || (cur.peek() != '"' && cur.peek() != '\''))
        cur.fail("expected quoted attribute value");
    char quote = cur.advance();
    std::string out;
    while (true) {
        if (cur.eof())
            cur.fail("unterminated attribute value");
        char c = cur.peek();
        if (c == quote) {
            cur.advance();
            return out;
        }
        if (c == '<')
            cur.fail("'<' in attribute value");
        cur.advance();
        if (c == '&')
            read_entity(cur, out);
        else
            out.push_back(c);
    }
}

// Skips "<!--...-->" or "<?...?>"; cursor sits on '<'.
bool skip_misc(Cursor& cur)
{
    if (cur.starts_with("<!--")) {
        int line = cur.line, col = cur.col;
        for (int i = 0; i < 4; ++i)
            cur.advance();
        while (!cur.starts_with("-->")) {
            if (cur.eof())
                throw XmlError(line, col, "unterminated comment");
            cur.advance();
        }
        for (int i = 0; i < 3; ++i)
            cur.advance();
        return true;
    }
    if (cur.starts_with("<?")) {
        int line = cur.line, col = cur.col;
        cur.advance();
        cur.advance();
        while (!cur.starts_with("?>")) {
            if (cur.eof())
                throw XmlError(line, col, "unterminated processing instruction");
            cur.advance();
        }
        cur.advance();
        cur.advance();
        return true;
    }
    return false;
}

XmlNode parse_element(Cursor& cur);

void parse_content(Cursor& cur, XmlNode& parent)
{
    std::string text;
    int text_line = cur.line, text_col = cur.col;

    auto flush_text = [&] {
        if (!text.empty()) {
            XmlNode t = XmlNode::text_node(std::move(text));
            t.line = text_line;
            t.col = text_col;
            parent.children.push_back(std::move(t));
            text.clear();
        }
    };

    while (true) {
        if (cur.eof())
            cur.fail("unexpected end inside <" + parent.tag + ">");
        char c = cur.peek();
        if (c == '<') {
            if (cur.starts_with("</")) {
                flush_text();
                cur.advance();
                cur.advance();
                std::string name = read_name(cur);
                if (name != parent.tag)
                    cur.fail("mismatched close tag </" + name + "> for <" + parent.tag + ">");
                skip_ws(cur);
                cur.expect('>', "'>'");
                return;
            }
            if (cur.starts_with("<![CDATA[")) {
                for (int i = 0; i < 9; ++i)
                    cur.advance();
                while (!cur.starts_with("]]>")) {
                    if (cur.eof())
                        cur.fail("unterminated CDATA section");
                    text.push_back(cur.advance());
                }
                for (int i = 0; i < 3; ++i)
                    cur.advance();
                continue;
            }
            if (skip_misc(cur))
                continue;
            if (cur.starts_with("<!"))
                cur.fail("markup declarations are not supported here");
            flush_text();
            parent.children.push_back(parse_element(cur));
            text_line = cur.line;
            text_col = cur.col;
            continue;
        }
        cur.advance();
        if (c == '&')
            read_entity(cur, text);
        else
            text.push_back(c);
    }
}

XmlNode parse_element(Cursor& cur)
{
    XmlNode node = XmlNode::elem("");
    node.line = cur.line;
    node.col = cur.col;
    cur.expect('<', "'<'");
    node.tag = read_name(cur);

    while (true) {
        skip_ws(cur);
        if (cur.eof())
            cur.fail("unterminated start tag <" + node.tag + ">");
        char c = cur.peek();
        if (c == '>') {
            cur.advance();
            parse_content(cur, node);
            return node;
        }
        if (c == '/') {
            cur.advance();
            cur.expect('>', "'>' after '/'");
            return node;
        }
        std::string name = read_name(cur);
        skip_ws(cur);
        cur.expect('=', "'=' after attribute name");
        skip_ws(cur);
        std::string value = read_attr_value(cur);
        for (const auto& [k, v] : node.attrs)
            if (k == name)
                cur.fail("duplicate attribute " + name);
        node.attrs.emplace_back(std::move(name), std::move(value));
    }
}

void serialize_node(const XmlNode& node, std::string& out)
{
    switch (node.kind) {
    case XmlNode::Kind::text:
        out += xml_escape_text(node.text);
        return;
    case XmlNode::Kind::comment:
        out += "<!--";
        out += node.text;
        out += "-->";
        return;
    case XmlNode::Kind::element:
        break;
    }
    out += '<';
    out += node.tag;
    for (const auto& [k, v] : node.attrs) {
        out += ' ';
        out += k;
        out += "=\"";
        out += xml_escape_attr(v);
        out += '"';
    }
    if (node.children.empty()) {
        out += "/>";
        return;
    }
    out += '>';
    for (const auto& child : node.children)
        serialize_node(child, out);
    out += "</";
    out += node.tag;
    out += '>';
}

} // namespace

XmlNode parse_xml(const std::string& input)
{
    Cursor cur{input};

    // UTF-8 BOM
    if (cur.starts_with("\xEF\xBB\xBF")) {
        cur.pos = 3;
    }

    while (true) {
        skip_ws(cur);
        if (cur.eof())
            cur.fail("no root element");
        if (cur.peek() != '<')
            cur.fail("text outside root element");
        if (cur.starts_with("<!DOCTYPE"))
            cur.fail("DOCTYPE is not supported");
        if (skip_misc(cur))
            continue;
        break;
    }

    XmlNode root = parse_element(cur);

    while (!cur.eof()) {
        skip_ws(cur);
        if (cur.eof())
            break;
        if (cur.peek() == '<' && skip_misc(cur))
            continue;
        cur.fail("content after root element");
    }
    return root;
}

std::string serialize_xml(const XmlNode& root)
{
    std::string out;
    serialize_node(root, out);
    return out;
}

std::string xml_escape_text(const std::string& s)
{
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string xml_escape_attr(const std::string& s)
{
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

} // namespace notemill
