#include "notemill/notation.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "notemill/matcher.hpp"
#include "notemill/xml.hpp"

namespace notemill {

NotationFormatError::NotationFormatError(std::string file_, int line_, int col_, const std::string& reason_)
    : std::runtime_error(file_ + ":" + std::to_string(line_) + ":" + std::to_string(col_) + ": " + reason_),
      file(std::move(file_)), line(line_), col(col_), reason(reason_)
{
}

DuplicateIdError::DuplicateIdError(std::string id_, std::string file1_, std::string file2_)
    : std::runtime_error("duplicate notation id '" + id_ + "' in " + file1_ + " and " + file2_),
      id(std::move(id_)), file1(std::move(file1_)), file2(std::move(file2_))
{
}

namespace {

struct FileCtx {
    const std::string& name;

    [[noreturn]] void fail(const XmlNode& at, const std::string& reason) const
    {
        throw NotationFormatError(name, at.line, at.col, reason);
    }
};

std::vector<const XmlNode*> element_children(const FileCtx& fc, const XmlNode& el)
{
    std::vector<const XmlNode*> out;
    for (const auto& child : el.children) {
        if (child.kind == XmlNode::Kind::element)
            out.push_back(&child);
        else if (child.kind == XmlNode::Kind::text && !child.is_ws_text())
            fc.fail(child, "unexpected text inside <" + el.tag + ">");
    }
    return out;
}

void reject_unknown_attrs(const FileCtx& fc, const XmlNode& el,
                          std::initializer_list<const char*> allowed)
{
    for (const auto& [k, v] : el.attrs) {
        if (el.tag == "notations" && k.rfind("xmlns", 0) == 0)
            continue;
        bool ok = false;
        for (const char* a : allowed)
            if (k == a)
                ok = true;
        if (!ok)
            fc.fail(el, "unexpected attribute '" + k + "' on <" + el.tag + ">");
    }
}

int parse_int_attr(const FileCtx& fc, const XmlNode& el, const std::string& value,
                   const char* what, int lo, int hi)
{
    if (value.empty() || value.size() > 6)
        fc.fail(el, std::string("bad ") + what + " value '" + value + "'");
    for (char c : value)
        if (c < '0' || c > '9')
            fc.fail(el, std::string("bad ") + what + " value '" + value + "'");
    int v = std::stoi(value);
    if (v < lo || v > hi)
        fc.fail(el, std::string(what) + " must be in " + std::to_string(lo) + ".." + std::to_string(hi));
    return v;
}

std::vector<std::string> split_tokens(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok)
        out.push_back(tok);
    return out;
}

// Prototype slot collection with positional rules: names unique, at most one
// sequence slot and only as the last argument of an apply.
struct ProtoBuilder {
    const FileCtx& fc;
    std::map<std::string, SlotKind> slots = {};
    bool seen_sequence = false;

    PatPtr parse(const XmlNode& el, bool sequence_allowed_here)
    {
        if (el.tag == "slot")
            return parse_slot(el, sequence_allowed_here);
        if (el.tag == "OMA")
            return parse_apply(el);
        if (el.tag == "OMBIND")
            return parse_bind(el);
        return exact_leaf(el);
    }

    PatPtr parse_slot(const XmlNode& el, bool sequence_allowed_here)
    {
        reject_unknown_attrs(fc, el, {"name", "kind"});
        const std::string* name = el.attr("name");
        if (!name || !is_identifier(*name))
            fc.fail(el, "<slot> requires an identifier name");
        SlotKind kind = SlotKind::single;
        if (const std::string* k = el.attr("kind")) {
            if (*k == "sequence")
                kind = SlotKind::sequence;
            else if (*k != "single")
                fc.fail(el, "slot kind must be single or sequence");
        }
        if (kind == SlotKind::sequence) {
            if (!sequence_allowed_here)
                fc.fail(el, "sequence slot only allowed as the last argument of an application");
            if (seen_sequence)
                fc.fail(el, "at most one sequence slot per prototype");
            seen_sequence = true;
        }
        if (!slots.emplace(*name, kind).second)
            fc.fail(el, "duplicate slot name '" + *name + "'");
        if (!el.children.empty())
            fc.fail(el, "<slot> must be empty");

        auto node = std::make_shared<PatNode>();
        node->kind = PatNode::Kind::slot;
        node->slot_name = *name;
        node->slot_kind = kind;
        return node;
    }

    PatPtr parse_apply(const XmlNode& el)
    {
        auto kids = element_children(fc, el);
        if (kids.empty())
            fc.fail(el, "<OMA> must contain a head");
        auto node = std::make_shared<PatNode>();
        node->kind = PatNode::Kind::apply;
        node->head = parse(*kids[0], false);
        for (std::size_t i = 1; i < kids.size(); ++i)
            node->args.push_back(parse(*kids[i], i + 1 == kids.size()));
        return node;
    }

    PatPtr parse_bind(const XmlNode& el)
    {
        auto kids = element_children(fc, el);
        if (kids.size() != 3 || kids[1]->tag != "OMBVAR")
            fc.fail(el, "<OMBIND> must contain binder, <OMBVAR>, body");
        auto node = std::make_shared<PatNode>();
        node->kind = PatNode::Kind::bind;
        node->head = parse(*kids[0], false);
        auto vars = element_children(fc, *kids[1]);
        if (vars.empty())
            fc.fail(*kids[1], "<OMBVAR> must contain at least one entry");
        for (const XmlNode* v : vars) {
            if (v->tag != "OMV" && v->tag != "slot")
                fc.fail(*v, "<OMBVAR> entries must be <OMV> or <slot>");
            node->args.push_back(parse(*v, false));
        }
        node->body = parse(*kids[2], false);
        return node;
    }

    PatPtr exact_leaf(const XmlNode& el)
    {
        auto node = std::make_shared<PatNode>();
        node->kind = PatNode::Kind::exact;
        try {
            node->exact = om_from_xml(el);
        } catch (const ParseError& e) {
            throw NotationFormatError(fc.name, e.line, e.col, e.reason);
        }
        return node;
    }
};

Prototype parse_prototype(const FileCtx& fc, const XmlNode& el)
{
    reject_unknown_attrs(fc, el, {});
    auto kids = element_children(fc, el);
    if (kids.size() != 1)
        fc.fail(el, "<prototype> must contain exactly one pattern element");

    ProtoBuilder builder{fc};
    Prototype proto;
    proto.root = builder.parse(*kids[0], false);
    proto.slots = std::move(builder.slots);

    const PatNode* head_pos = proto.root.get();
    if (head_pos->kind == PatNode::Kind::apply || head_pos->kind == PatNode::Kind::bind)
        head_pos = head_pos->head.get();
    if (head_pos->kind != PatNode::Kind::exact || head_pos->exact->kind != OMKind::symbol)
        fc.fail(*kids[0], "pattern head must be a concrete symbol");
    proto.head = SymbolRef{head_pos->exact->cd, head_pos->exact->name};
    return proto;
}

// Template bodies come in two shapes: MathML fragments (element trees whose
// whitespace-only text is insignificant) and l:tex / l:txt bodies where text
// is the payload and kept verbatim.
struct TemplateBuilder {
    const FileCtx& fc;
    const Prototype& proto;
    bool textual = false;

    std::vector<TemplateNode> parse_children(const XmlNode& parent)
    {
        std::vector<TemplateNode> out;
        for (const auto& child : parent.children) {
            if (child.kind == XmlNode::Kind::comment)
                continue;
            if (child.kind == XmlNode::Kind::text) {
                if (!textual && child.is_ws_text())
                    continue;
                TemplateNode t;
                t.kind = TemplateNode::Kind::text;
                t.text = child.text;
                out.push_back(std::move(t));
                continue;
            }
            out.push_back(parse_element(child));
        }
        return out;
    }

    TemplateNode parse_element(const XmlNode& el)
    {
        if (el.tag == "render")
            return parse_render(el);
        if (el.tag == "sep")
            fc.fail(el, "<sep> only allowed inside <render>");
        if (el.tag == "l:tex" || el.tag == "l:txt")
            fc.fail(el, "<" + el.tag + "> only allowed as the whole rendering body");
        if (textual)
            fc.fail(el, "only <render> elements allowed inside textual bodies");

        TemplateNode t;
        t.kind = TemplateNode::Kind::element;
        t.tag = el.tag;
        t.attrs = el.attrs;
        t.children = parse_children(el);
        return t;
    }

    TemplateNode parse_render(const XmlNode& el)
    {
        reject_unknown_attrs(fc, el, {"slot", "argprec"});
        const std::string* slot = el.attr("slot");
        if (!slot)
            fc.fail(el, "<render> requires a slot attribute");
        auto it = proto.slots.find(*slot);
        if (it == proto.slots.end())
            fc.fail(el, "slot '" + *slot + "' is not declared in the prototype");

        TemplateNode t;
        t.kind = TemplateNode::Kind::slot;
        t.slot_name = *slot;
        if (const std::string* ap = el.attr("argprec"))
            t.argprec = parse_int_attr(fc, el, *ap, "argprec", 0, 2000);

        bool saw_sep = false;
        for (const auto& child : el.children) {
            if (child.kind == XmlNode::Kind::comment || (child.kind == XmlNode::Kind::text && child.is_ws_text()))
                continue;
            if (child.kind != XmlNode::Kind::element || child.tag != "sep")
                fc.fail(child, "<render> may only contain one <sep>");
            if (saw_sep)
                fc.fail(child, "<render> may only contain one <sep>");
            saw_sep = true;
            if (it->second != SlotKind::sequence)
                fc.fail(child, "<sep> requires a sequence slot");
            reject_unknown_attrs(fc, child, {});
            t.separator = parse_children(child);
        }
        return t;
    }
};

void collect_used_slots(const std::vector<TemplateNode>& nodes, std::set<std::string>& out)
{
    for (const auto& n : nodes) {
        if (n.kind == TemplateNode::Kind::slot)
            out.insert(n.slot_name);
        collect_used_slots(n.children, out);
        collect_used_slots(n.separator, out);
    }
}

Rendering parse_rendering(const FileCtx& fc, const XmlNode& el, const Prototype& proto)
{
    reject_unknown_attrs(fc, el, {"lang", "format", "levels", "collections", "precedence"});

    Rendering r;
    const std::string* prec = el.attr("precedence");
    if (!prec)
        fc.fail(el, "<rendering> requires a precedence attribute");
    r.precedence = parse_int_attr(fc, el, *prec, "precedence", 0, 1000);

    if (const std::string* langs = el.attr("lang")) {
        for (const std::string& tag : split_tokens(*langs)) {
            if (!is_language_tag(tag))
                fc.fail(el, "bad language tag '" + tag + "'");
            r.constraint.languages.insert(tag);
        }
        if (r.constraint.languages.empty())
            fc.fail(el, "empty lang attribute");
    }
    if (const std::string* colls = el.attr("collections")) {
        for (const std::string& id : split_tokens(*colls))
            r.constraint.collections.insert(id);
        if (r.constraint.collections.empty())
            fc.fail(el, "empty collections attribute");
    }
    if (const std::string* levels = el.attr("levels")) {
        std::size_t dash = levels->find('-');
        LevelRange range;
        if (dash == std::string::npos) {
            range.lo = range.hi = parse_int_attr(fc, el, *levels, "levels", kMinLevel, kMaxLevel);
        } else {
            range.lo = parse_int_attr(fc, el, levels->substr(0, dash), "levels", kMinLevel, kMaxLevel);
            range.hi = parse_int_attr(fc, el, levels->substr(dash + 1), "levels", kMinLevel, kMaxLevel);
        }
        if (range.lo > range.hi)
            fc.fail(el, "levels range is reversed");
        r.constraint.levels = range;
    }

    // The body determines which format family the template can serve; an
    // explicit format attribute may only restate it.
    auto kids = element_children(fc, el);
    OutputFormat body_format = OutputFormat::mathml;
    TemplateBuilder builder{fc, proto};
    if (kids.size() == 1 && (kids[0]->tag == "l:tex" || kids[0]->tag == "l:txt")) {
        body_format = kids[0]->tag == "l:tex" ? OutputFormat::latex : OutputFormat::text;
        reject_unknown_attrs(fc, *kids[0], {});
        builder.textual = true;
        r.body = builder.parse_children(*kids[0]);
    } else {
        r.body = builder.parse_children(el);
    }

    if (const std::string* fmt = el.attr("format")) {
        for (const std::string& f : split_tokens(*fmt)) {
            std::optional<OutputFormat> parsed = format_from_string(f);
            if (!parsed)
                fc.fail(el, "unknown format '" + f + "'");
            if (*parsed != body_format)
                fc.fail(el, "format attribute conflicts with the template body");
        }
    }
    r.constraint.formats.insert(body_format);

    if (r.body.empty())
        fc.fail(el, "<rendering> body is empty");

    std::set<std::string> used;
    collect_used_slots(r.body, used);
    for (const auto& [name, kind] : proto.slots)
        if (kind == SlotKind::single && !used.contains(name))
            fc.fail(el, "template never renders slot '" + name + "'");
    return r;
}

Notation parse_notation(const FileCtx& fc, const XmlNode& el)
{
    reject_unknown_attrs(fc, el, {"id", "draft", "observation"});
    Notation n;
    const std::string* id = el.attr("id");
    if (!id || id->empty())
        fc.fail(el, "<notation> requires a nonempty id");
    n.id = *id;
    if (const std::string* draft = el.attr("draft")) {
        if (*draft == "true")
            n.draft = true;
        else if (*draft != "false")
            fc.fail(el, "draft must be true or false");
    }
    if (const std::string* obs = el.attr("observation"))
        n.source_observation = *obs;

    auto kids = element_children(fc, el);
    if (kids.empty() || kids[0]->tag != "prototype")
        fc.fail(el, "<notation> must start with a <prototype>");
    n.prototype = parse_prototype(fc, *kids[0]);

    for (std::size_t i = 1; i < kids.size(); ++i) {
        if (kids[i]->tag != "rendering")
            fc.fail(*kids[i], "expected <rendering>");
        n.renderings.push_back(parse_rendering(fc, *kids[i], n.prototype));
    }
    if (n.renderings.empty())
        fc.fail(el, "<notation> needs at least one <rendering>");
    return n;
}

} // namespace

std::vector<const Notation*> NotationStore::candidates_for(const SymbolRef& head) const
{
    std::vector<const Notation*> out;
    auto it = by_head_.find(head);
    if (it == by_head_.end())
        return out;
    out.reserve(it->second.size());
    for (std::size_t idx : it->second)
        out.push_back(&notations_[idx]);
    return out;
}

NotationStore load_notations(std::vector<NotationFile> files, const LoadOptions& options)
{
    std::stable_sort(files.begin(), files.end(),
                     [](const NotationFile& a, const NotationFile& b) { return a.name < b.name; });

    NotationStore store;
    std::map<std::string, std::string> id_to_file;

    for (const NotationFile& file : files) {
        FileCtx fc{file.name};
        XmlNode root;
        try {
            root = parse_xml(file.content);
        } catch (const XmlError& e) {
            throw NotationFormatError(file.name, e.line, e.col, e.reason);
        }
        if (root.tag != "notations")
            fc.fail(root, "root element must be <notations>");
        reject_unknown_attrs(fc, root, {});

        for (const XmlNode* el : element_children(fc, root)) {
            if (el->tag != "notation")
                fc.fail(*el, "expected <notation>");
            Notation n = parse_notation(fc, *el);

            auto [it, inserted] = id_to_file.emplace(n.id, file.name);
            if (!inserted)
                throw DuplicateIdError(n.id, it->second, file.name);

            if (n.draft) {
                if (!options.allow_drafts)
                    fc.fail(*el, "draft notation '" + n.id + "' requires allow-drafts");
                store.warnings_.push_back(file.name + ": notation '" + n.id + "' loaded as draft");
            }

            store.by_head_[n.prototype.head].push_back(store.notations_.size());
            store.notations_.push_back(std::move(n));
        }
    }
    return store;
}

NotationStore load_notations_dir(const std::string& dir, const LoadOptions& options)
{
    namespace fs = std::filesystem;
    std::vector<NotationFile> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".xml")
            continue;
        std::ifstream in(entry.path(), std::ios::binary);
        if (!in)
            throw std::runtime_error("cannot read " + entry.path().string());
        std::ostringstream buf;
        buf << in.rdbuf();
        files.push_back({entry.path().filename().string(), buf.str()});
    }
    return load_notations(std::move(files), options);
}

std::optional<SymbolRef> head_symbol(const OMObject& expr)
{
    const OMObject* head = &expr;
    if (expr.kind == OMKind::apply || expr.kind == OMKind::bind)
        head = expr.head.get();
    if (head->kind != OMKind::symbol)
        return std::nullopt;
    return SymbolRef{head->cd, head->name};
}

std::optional<SelectResult> select(const NotationStore& store, const OMPtr& expr,
                                   const RenderContext& ctx, const SpecificityOrder& order)
{
    std::optional<SymbolRef> head = head_symbol(*expr);
    if (!head)
        return std::nullopt;

    std::optional<SelectResult> best;
    Specificity best_spec;

    for (const Notation* n : store.candidates_for(*head)) {
        std::optional<Bindings> bindings = match_prototype(n->prototype, expr);
        if (!bindings)
            continue;
        std::shared_ptr<const Bindings> shared;
        for (const Rendering& r : n->renderings) {
            if (!eligible(r.constraint, ctx))
                continue;
            Specificity s = specificity(r.constraint, ctx);
            if (best && !specificity_less(best_spec, s, order))
                continue;
            if (!shared)
                shared = std::make_shared<const Bindings>(std::move(*bindings));
            best = SelectResult{n, &r, shared};
            best_spec = s;
        }
    }
    return best;
}

} // namespace notemill
