#include "notemill/render.hpp"

#include "notemill/matcher.hpp"
#include "notemill/xml.hpp"

#include <json.hpp>

namespace notemill {

PresNode PresNode::elem(std::string tag)
{
    PresNode n;
    n.kind = Kind::element;
    n.tag = std::move(tag);
    return n;
}

PresNode PresNode::text_node(std::string text)
{
    PresNode n;
    n.kind = Kind::text;
    n.text = std::move(text);
    return n;
}

RenderError::RenderError(const std::string& what) : std::logic_error(what) {}

const LocaleTable& default_locale_table()
{
    static const LocaleTable table = [] {
        LocaleTable t;
        t["en"] = {".", ",", 3, 4};
        t["de"] = {",", ".", 3, 4};
        t["nl"] = {",", ".", 3, 4};
        t["es"] = {",", ".", 3, 4};
        // no-break space grouping
        for (const char* lang : {"fr", "fi", "hu", "ru"})
            t[lang] = {",", "\xC2\xA0", 3, 4};
        return t;
    }();
    return table;
}

LocaleTable load_locale_table(const std::string& json_text, LocaleTable base)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("locale table: ") + e.what());
    }
    if (!doc.is_object())
        throw std::invalid_argument("locale table: top level must be an object");

    for (const auto& [lang, entry] : doc.items()) {
        if (!is_language_tag(lang))
            throw std::invalid_argument("locale table: bad language tag '" + lang + "'");
        if (!entry.is_object())
            throw std::invalid_argument("locale table: entry for '" + lang + "' must be an object");
        LocaleNumberSpec spec =
            base.count(lang) ? base[lang] : LocaleNumberSpec{};
        for (const auto& [key, value] : entry.items()) {
            if (key == "decimal_sep" && value.is_string())
                spec.decimal_sep = value.get<std::string>();
            else if (key == "group_sep" && value.is_string())
                spec.group_sep = value.get<std::string>();
            else if (key == "group_size" && value.is_number_integer())
                spec.group_size = value.get<int>();
            else if (key == "min_grouping_digits" && value.is_number_integer())
                spec.min_grouping_digits = value.get<int>();
            else
                throw std::invalid_argument("locale table: bad field '" + key + "' for '" + lang + "'");
        }
        if (spec.decimal_sep.empty() || spec.decimal_sep == spec.group_sep)
            throw std::invalid_argument("locale table: decimal_sep must differ from group_sep for '" + lang + "'");
        if (spec.group_size < 2)
            throw std::invalid_argument("locale table: group_size must be >= 2 for '" + lang + "'");
        if (spec.min_grouping_digits < 1)
            throw std::invalid_argument("locale table: min_grouping_digits must be >= 1 for '" + lang + "'");
        base[lang] = spec;
    }
    return base;
}

const LocaleNumberSpec& locale_spec_for(const LocaleTable& table, const std::string& language)
{
    static const LocaleNumberSpec fallback{};
    auto it = table.find(language);
    return it == table.end() ? fallback : it->second;
}

namespace {

std::string group_digits(const std::string& digits, const LocaleNumberSpec& spec)
{
    if (static_cast<int>(digits.size()) < spec.min_grouping_digits)
        return digits;
    std::string out;
    int ungrouped = static_cast<int>(digits.size()) % spec.group_size;
    if (ungrouped == 0)
        ungrouped = spec.group_size;
    out.append(digits, 0, static_cast<std::size_t>(ungrouped));
    for (std::size_t i = static_cast<std::size_t>(ungrouped); i < digits.size(); i += static_cast<std::size_t>(spec.group_size)) {
        out += spec.group_sep;
        out.append(digits, i, static_cast<std::size_t>(spec.group_size));
    }
    return out;
}

} // namespace

std::string format_number(const OMObject& number, const LocaleNumberSpec& spec)
{
    if (number.kind != OMKind::integer && number.kind != OMKind::decimal)
        throw RenderError("format_number expects an integer or decimal");
    std::string out;
    if (number.negative)
        out += '-';
    out += group_digits(number.int_digits, spec);
    if (number.kind == OMKind::decimal && !number.frac_digits.empty()) {
        out += spec.decimal_sep;
        out += number.frac_digits;
    }
    return out;
}

namespace {

constexpr int kAtomPrecedence = 1000;

struct Renderer {
    const NotationStore& store;
    const RenderContext& ctx;
    const EngineOptions& options;
    const LocaleNumberSpec& locale;

    struct Out {
        PresNode node;
        int prec = kAtomPrecedence;
    };

    bool mathml() const { return ctx.format == OutputFormat::mathml; }

    PresNode token(const char* tag, std::string text) const
    {
        if (!mathml())
            return PresNode::text_node(std::move(text));
        PresNode n = PresNode::elem(tag);
        n.children.push_back(PresNode::text_node(std::move(text)));
        return n;
    }

    PresNode group(std::vector<PresNode> nodes) const
    {
        if (nodes.size() == 1)
            return std::move(nodes[0]);
        PresNode n = PresNode::elem(mathml() ? "mrow" : "g");
        n.children = std::move(nodes);
        return n;
    }

    PresNode bracketed(PresNode inner) const
    {
        PresNode n = PresNode::elem(mathml() ? "mrow" : "g");
        if (mathml()) {
            n.children.push_back(token("mo", "("));
            n.children.push_back(std::move(inner));
            n.children.push_back(token("mo", ")"));
        } else {
            bool tex = ctx.format == OutputFormat::latex;
            n.children.push_back(PresNode::text_node(tex ? "\\left(" : "("));
            n.children.push_back(std::move(inner));
            n.children.push_back(PresNode::text_node(tex ? "\\right)" : ")"));
        }
        return n;
    }

    PresNode child_for_slot(const OMPtr& expr, int argprec)
    {
        Out out = render_expr(expr);
        if (out.prec < argprec)
            return bracketed(std::move(out.node));
        return std::move(out.node);
    }

    void instantiate_into(const std::vector<TemplateNode>& nodes, const Bindings& bindings,
                          std::vector<PresNode>& out)
    {
        for (const TemplateNode& t : nodes) {
            switch (t.kind) {
            case TemplateNode::Kind::text:
                out.push_back(PresNode::text_node(t.text));
                break;
            case TemplateNode::Kind::element: {
                PresNode el = PresNode::elem(t.tag);
                el.attrs = t.attrs;
                instantiate_into(t.children, bindings, el.children);
                out.push_back(std::move(el));
                break;
            }
            case TemplateNode::Kind::slot: {
                const BoundValue* v = bindings.find(t.slot_name);
                if (!v)
                    throw RenderError("unbound slot '" + t.slot_name + "'");
                if (!v->is_sequence) {
                    out.push_back(child_for_slot(v->single, t.argprec));
                    break;
                }
                for (std::size_t i = 0; i < v->items.size(); ++i) {
                    if (i > 0)
                        instantiate_into(t.separator, bindings, out);
                    out.push_back(child_for_slot(v->items[i], t.argprec));
                }
                break;
            }
            }
        }
    }

    // Generic cd.name(arg, ...) shape, marked so gap detection can find it.
    Out fallback(const OMPtr& expr)
    {
        std::vector<PresNode> pieces;
        const OMObject& e = *expr;
        const OMObject* head = (e.kind == OMKind::apply || e.kind == OMKind::bind) ? e.head.get() : &e;

        if (head->kind == OMKind::symbol)
            pieces.push_back(token("mi", head->cd + "." + head->name));
        else
            pieces.push_back(render_expr(e.head).node);

        if (e.kind == OMKind::apply || e.kind == OMKind::bind) {
            std::vector<OMPtr> parts = e.args;
            if (e.kind == OMKind::bind)
                parts.push_back(e.body);
            pieces.push_back(token("mo", "("));
            for (std::size_t i = 0; i < parts.size(); ++i) {
                if (i > 0)
                    pieces.push_back(mathml() ? token("mo", ",") : PresNode::text_node(", "));
                pieces.push_back(render_expr(parts[i]).node);
            }
            pieces.push_back(token("mo", ")"));
        }

        PresNode node = group(std::move(pieces));
        if (node.kind == PresNode::Kind::text) {
            // a bare symbol in latex/text output; wrap so the marker has a home
            PresNode g = PresNode::elem("g");
            g.children.push_back(std::move(node));
            node = std::move(g);
        }
        node.fallback_marker = true;
        if (mathml())
            node.attrs.emplace_back("class", "notation-fallback");
        return {std::move(node), kAtomPrecedence};
    }

    Out render_expr(const OMPtr& expr)
    {
        const OMObject& e = *expr;
        switch (e.kind) {
        case OMKind::integer:
        case OMKind::decimal:
            return {token("mn", format_number(e, locale)), kAtomPrecedence};
        case OMKind::variable:
            return {token("mi", e.name), kAtomPrecedence};
        case OMKind::string:
            return {token("mtext", e.str), kAtomPrecedence};
        case OMKind::symbol:
        case OMKind::apply:
        case OMKind::bind:
            break;
        }

        std::optional<SelectResult> sel = select(store, expr, ctx, options.specificity_order);
        if (!sel)
            return fallback(expr);

        std::vector<PresNode> nodes;
        instantiate_into(sel->rendering->body, *sel->bindings, nodes);
        return {group(std::move(nodes)), sel->rendering->precedence};
    }
};

void serialize_mathml(const PresNode& node, std::string& out)
{
    if (node.kind == PresNode::Kind::text) {
        out += xml_escape_text(node.text);
        return;
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
    for (const PresNode& child : node.children)
        serialize_mathml(child, out);
    out += "</";
    out += node.tag;
    out += '>';
}

void serialize_text(const PresNode& node, std::string& out)
{
    if (node.kind == PresNode::Kind::text) {
        out += node.text;
        return;
    }
    for (const PresNode& child : node.children)
        serialize_text(child, out);
}

} // namespace

PresNode render(const OMPtr& expr, const NotationStore& store, const RenderContext& ctx,
                const EngineOptions& options)
{
    Renderer r{store, ctx, options, locale_spec_for(options.locales, ctx.language)};
    return r.render_expr(expr).node;
}

std::string serialize_pres(const PresNode& node, OutputFormat format)
{
    std::string out;
    if (format == OutputFormat::mathml) {
        out += "<math xmlns=\"http://www.w3.org/1998/Math/MathML\">";
        serialize_mathml(node, out);
        out += "</math>";
    } else {
        serialize_text(node, out);
    }
    return out;
}

std::size_t count_fallback_markers(const PresNode& node)
{
    std::size_t n = node.fallback_marker ? 1 : 0;
    for (const PresNode& child : node.children)
        n += count_fallback_markers(child);
    return n;
}

} // namespace notemill
