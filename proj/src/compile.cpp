#include "notemill/compile.hpp"

#include <algorithm>

#include "notemill/matcher.hpp"

#include <json.hpp>

namespace notemill {

namespace {

constexpr int kAtomPrecedence = 1000;

using Arm = CompiledNode::Arm;

CompiledPtr make_text(std::string text)
{
    auto n = std::make_shared<CompiledNode>();
    n->kind = CompiledNode::Kind::text;
    n->text = std::move(text);
    return n;
}

std::shared_ptr<CompiledNode> make_elem(std::string tag)
{
    auto n = std::make_shared<CompiledNode>();
    n->kind = CompiledNode::Kind::element;
    n->tag = std::move(tag);
    return n;
}

// The static stage: matching and static-dimension filtering happen here;
// whatever depends on level or collection is left behind as a branch.
struct Compiler {
    const NotationStore& store;
    const std::string& language;
    OutputFormat format;
    const EngineOptions& options;
    const LocaleNumberSpec& locale;

    struct CNode {
        CompiledPtr node;
        int prec = kAtomPrecedence;      // branch: precedence of the default arm
        std::vector<int> arm_precs;      // nonempty iff node is a root branch
    };

    bool mathml() const { return format == OutputFormat::mathml; }

    CompiledPtr token(const char* tag, std::string text) const
    {
        if (!mathml())
            return make_text(std::move(text));
        auto n = make_elem(tag);
        n->children.push_back(make_text(std::move(text)));
        return n;
    }

    CompiledPtr group(std::vector<CompiledPtr> nodes) const
    {
        if (nodes.size() == 1)
            return std::move(nodes[0]);
        auto n = make_elem(mathml() ? "mrow" : "g");
        n->children = std::move(nodes);
        return n;
    }

    CompiledPtr bracketed(CompiledPtr inner) const
    {
        auto n = make_elem(mathml() ? "mrow" : "g");
        if (mathml()) {
            n->children.push_back(token("mo", "("));
            n->children.push_back(std::move(inner));
            n->children.push_back(token("mo", ")"));
        } else {
            bool tex = format == OutputFormat::latex;
            n->children.push_back(make_text(tex ? "\\left(" : "("));
            n->children.push_back(std::move(inner));
            n->children.push_back(make_text(tex ? "\\right)" : ")"));
        }
        return n;
    }

    // Child precedence may differ per dynamic arm, so bracketing descends
    // into the arms instead of wrapping the branch as a whole.
    CompiledPtr child_for_slot(const OMPtr& expr, int argprec)
    {
        CNode c = compile_expr(expr);
        if (c.arm_precs.empty())
            return c.prec < argprec ? bracketed(std::move(c.node)) : std::move(c.node);

        auto rebuilt = std::make_shared<CompiledNode>();
        rebuilt->kind = CompiledNode::Kind::branch;
        for (std::size_t i = 0; i < c.node->arms.size(); ++i) {
            Arm arm = c.node->arms[i];
            if (c.arm_precs[i] < argprec)
                arm.node = bracketed(std::move(arm.node));
            rebuilt->arms.push_back(std::move(arm));
        }
        rebuilt->default_arm = c.prec < argprec ? bracketed(c.node->default_arm)
                                                : c.node->default_arm;
        return rebuilt;
    }

    void instantiate_into(const std::vector<TemplateNode>& nodes, const Bindings& bindings,
                          std::vector<CompiledPtr>& out)
    {
        for (const TemplateNode& t : nodes) {
            switch (t.kind) {
            case TemplateNode::Kind::text:
                out.push_back(make_text(t.text));
                break;
            case TemplateNode::Kind::element: {
                auto el = make_elem(t.tag);
                el->attrs = t.attrs;
                instantiate_into(t.children, bindings, el->children);
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

    CompiledPtr instantiate(const Rendering& r, const Bindings& bindings)
    {
        std::vector<CompiledPtr> nodes;
        instantiate_into(r.body, bindings, nodes);
        return group(std::move(nodes));
    }

    CNode fallback(const OMPtr& expr)
    {
        std::vector<CompiledPtr> pieces;
        const OMObject& e = *expr;
        const OMObject* head = (e.kind == OMKind::apply || e.kind == OMKind::bind) ? e.head.get() : &e;

        if (head->kind == OMKind::symbol)
            pieces.push_back(token("mi", head->cd + "." + head->name));
        else
            pieces.push_back(compile_expr(e.head).node);

        if (e.kind == OMKind::apply || e.kind == OMKind::bind) {
            std::vector<OMPtr> parts = e.args;
            if (e.kind == OMKind::bind)
                parts.push_back(e.body);
            pieces.push_back(token("mo", "("));
            for (std::size_t i = 0; i < parts.size(); ++i) {
                if (i > 0)
                    pieces.push_back(mathml() ? token("mo", ",") : make_text(", "));
                pieces.push_back(compile_expr(parts[i]).node);
            }
            pieces.push_back(token("mo", ")"));
        }

        CompiledPtr grouped = group(std::move(pieces));
        std::shared_ptr<CompiledNode> node;
        if (grouped->kind == CompiledNode::Kind::text) {
            // a bare symbol in latex/text output; wrap so the marker has a home
            node = make_elem("g");
            node->children.push_back(std::move(grouped));
        } else {
            node = std::make_shared<CompiledNode>(*grouped);
        }
        node->fallback_marker = true;
        if (mathml())
            node->attrs.emplace_back("class", "notation-fallback");
        return {node, kAtomPrecedence, {}};
    }

    struct Entry {
        const Rendering* rendering;
        std::shared_ptr<const Bindings> bindings;
        Specificity spec;
    };

    bool static_eligible(const ContextConstraint& c) const
    {
        if (!c.languages.empty() && !c.languages.contains(language))
            return false;
        if (!c.formats.empty() && !c.formats.contains(format))
            return false;
        return true;
    }

    static bool dynamic_always_true(const ContextConstraint& c)
    {
        return c.collections.empty() && (!c.levels || c.levels->full());
    }

    CNode compile_expr(const OMPtr& expr)
    {
        const OMObject& e = *expr;
        switch (e.kind) {
        case OMKind::integer:
        case OMKind::decimal:
            return {token("mn", format_number(e, locale)), kAtomPrecedence, {}};
        case OMKind::variable:
            return {token("mi", e.name), kAtomPrecedence, {}};
        case OMKind::string:
            return {token("mtext", e.str), kAtomPrecedence, {}};
        case OMKind::symbol:
        case OMKind::apply:
        case OMKind::bind:
            break;
        }

        std::vector<Entry> entries;
        std::optional<SymbolRef> head = head_symbol(e);
        if (head) {
            for (const Notation* n : store.candidates_for(*head)) {
                std::optional<Bindings> bindings = match_prototype(n->prototype, expr);
                if (!bindings)
                    continue;
                std::shared_ptr<const Bindings> shared;
                for (const Rendering& r : n->renderings) {
                    if (!static_eligible(r.constraint))
                        continue;
                    if (!shared)
                        shared = std::make_shared<const Bindings>(std::move(*bindings));
                    Specificity s;
                    s[Dimension::language] = r.constraint.languages.empty() ? 0 : 1;
                    s[Dimension::format] = r.constraint.formats.empty() ? 0 : 1;
                    s[Dimension::level] = r.constraint.levels ? 1 : 0;
                    s[Dimension::collection] = r.constraint.collections.empty() ? 0 : 1;
                    entries.push_back({&r, shared, s});
                }
            }
        }
        std::stable_sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
            return specificity_less(b.spec, a.spec, options.specificity_order);
        });

        // Arms in specificity order; the first candidate that is certain to
        // apply truncates the list and becomes the default.
        std::vector<Arm> arms;
        std::vector<int> arm_precs;
        CompiledPtr def;
        int def_prec = kAtomPrecedence;

        for (const Entry& entry : entries) {
            const ContextConstraint& c = entry.rendering->constraint;
            if (dynamic_always_true(c)) {
                def = instantiate(*entry.rendering, *entry.bindings);
                def_prec = entry.rendering->precedence;
                break;
            }
            Arm arm;
            arm.levels = c.levels;
            if (arm.levels && arm.levels->full())
                arm.levels.reset();
            arm.collections = c.collections;
            bool duplicate = false;
            for (const Arm& prior : arms)
                if (prior.levels == arm.levels && prior.collections == arm.collections)
                    duplicate = true;
            if (duplicate)
                continue;
            arm.node = instantiate(*entry.rendering, *entry.bindings);
            arms.push_back(std::move(arm));
            arm_precs.push_back(entry.rendering->precedence);
        }

        if (!def) {
            CNode fb = fallback(expr);
            def = fb.node;
            def_prec = fb.prec;
        }
        if (arms.empty())
            return {def, def_prec, {}};

        auto branch = std::make_shared<CompiledNode>();
        branch->kind = CompiledNode::Kind::branch;
        branch->arms = std::move(arms);
        branch->default_arm = def;
        return {branch, def_prec, std::move(arm_precs)};
    }
};

} // namespace

CompiledTemplate compile(const OMPtr& expr, const NotationStore& store,
                         const std::string& language, OutputFormat format,
                         const EngineOptions& options)
{
    Compiler c{store, language, format, options, locale_spec_for(options.locales, language)};
    CompiledTemplate t;
    t.language = language;
    t.format = format;
    t.root = c.compile_expr(expr).node;
    return t;
}

namespace {

PresNode deliver_node(const CompiledNode& n, int level, const std::string& collection)
{
    switch (n.kind) {
    case CompiledNode::Kind::text: {
        PresNode t = PresNode::text_node(n.text);
        t.fallback_marker = n.fallback_marker;
        return t;
    }
    case CompiledNode::Kind::element: {
        PresNode el = PresNode::elem(n.tag);
        el.attrs = n.attrs;
        el.fallback_marker = n.fallback_marker;
        for (const CompiledPtr& child : n.children)
            el.children.push_back(deliver_node(*child, level, collection));
        return el;
    }
    case CompiledNode::Kind::branch:
        for (const Arm& arm : n.arms) {
            if (arm.levels && !arm.levels->contains(level))
                continue;
            if (!arm.collections.empty() && !arm.collections.contains(collection))
                continue;
            return deliver_node(*arm.node, level, collection);
        }
        return deliver_node(*n.default_arm, level, collection);
    }
    throw std::logic_error("corrupt compiled node");
}

} // namespace

PresNode deliver(const CompiledTemplate& t, int level, const std::string& collection)
{
    if (level < kMinLevel || level > kMaxLevel)
        throw std::invalid_argument("level must be in 1..4");
    if (!t.root)
        throw std::invalid_argument("empty compiled template");
    return deliver_node(*t.root, level, collection);
}

namespace {

std::size_t count_branch_nodes(const CompiledNode& n)
{
    std::size_t total = 0;
    switch (n.kind) {
    case CompiledNode::Kind::text:
        return 0;
    case CompiledNode::Kind::element:
        for (const CompiledPtr& child : n.children)
            total += count_branch_nodes(*child);
        return total;
    case CompiledNode::Kind::branch:
        total = 1;
        for (const Arm& arm : n.arms)
            total += count_branch_nodes(*arm.node);
        total += count_branch_nodes(*n.default_arm);
        return total;
    }
    return total;
}

using nlohmann::json;

json node_to_json(const CompiledNode& n)
{
    json j;
    switch (n.kind) {
    case CompiledNode::Kind::text:
        j["k"] = "t";
        j["text"] = n.text;
        break;
    case CompiledNode::Kind::element: {
        j["k"] = "e";
        j["tag"] = n.tag;
        json attrs = json::array();
        for (const auto& [k, v] : n.attrs)
            attrs.push_back(json::array({k, v}));
        j["attrs"] = std::move(attrs);
        json children = json::array();
        for (const CompiledPtr& child : n.children)
            children.push_back(node_to_json(*child));
        j["children"] = std::move(children);
        break;
    }
    case CompiledNode::Kind::branch: {
        j["k"] = "b";
        json arms = json::array();
        for (const Arm& arm : n.arms) {
            json a;
            a["levels"] = arm.levels ? json::array({arm.levels->lo, arm.levels->hi}) : json();
            a["collections"] = arm.collections;
            a["node"] = node_to_json(*arm.node);
            arms.push_back(std::move(a));
        }
        j["arms"] = std::move(arms);
        j["default"] = node_to_json(*n.default_arm);
        break;
    }
    }
    if (n.fallback_marker)
        j["fb"] = true;
    return j;
}

[[noreturn]] void bad_template(const std::string& why)
{
    throw std::invalid_argument("compiled template: " + why);
}

CompiledPtr node_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("k") || !j["k"].is_string())
        bad_template("node without a kind");
    std::string k = j["k"].get<std::string>();
    auto n = std::make_shared<CompiledNode>();
    if (j.contains("fb"))
        n->fallback_marker = j["fb"].is_boolean() && j["fb"].get<bool>();

    if (k == "t") {
        n->kind = CompiledNode::Kind::text;
        if (!j.contains("text") || !j["text"].is_string())
            bad_template("text node without text");
        n->text = j["text"].get<std::string>();
        return n;
    }
    if (k == "e") {
        n->kind = CompiledNode::Kind::element;
        if (!j.contains("tag") || !j["tag"].is_string())
            bad_template("element node without tag");
        n->tag = j["tag"].get<std::string>();
        if (!j.contains("attrs") || !j["attrs"].is_array())
            bad_template("element node without attrs");
        for (const json& a : j["attrs"]) {
            if (!a.is_array() || a.size() != 2 || !a[0].is_string() || !a[1].is_string())
                bad_template("bad attribute entry");
            n->attrs.emplace_back(a[0].get<std::string>(), a[1].get<std::string>());
        }
        if (!j.contains("children") || !j["children"].is_array())
            bad_template("element node without children");
        for (const json& c : j["children"])
            n->children.push_back(node_from_json(c));
        return n;
    }
    if (k == "b") {
        n->kind = CompiledNode::Kind::branch;
        if (!j.contains("arms") || !j["arms"].is_array() || !j.contains("default"))
            bad_template("branch node without arms or default");
        for (const json& a : j["arms"]) {
            if (!a.is_object() || !a.contains("levels") || !a.contains("collections") || !a.contains("node"))
                bad_template("bad branch arm");
            Arm arm;
            if (!a["levels"].is_null()) {
                if (!a["levels"].is_array() || a["levels"].size() != 2
                    || !a["levels"][0].is_number_integer() || !a["levels"][1].is_number_integer())
                    bad_template("bad level range");
                LevelRange range{a["levels"][0].get<int>(), a["levels"][1].get<int>()};
                if (range.lo < kMinLevel || range.hi > kMaxLevel || range.lo > range.hi)
                    bad_template("level range out of bounds");
                arm.levels = range;
            }
            if (!a["collections"].is_array())
                bad_template("bad collections set");
            for (const json& c : a["collections"]) {
                if (!c.is_string())
                    bad_template("bad collection id");
                arm.collections.insert(c.get<std::string>());
            }
            arm.node = node_from_json(a["node"]);
            n->arms.push_back(std::move(arm));
        }
        n->default_arm = node_from_json(j["default"]);
        return n;
    }
    bad_template("unknown node kind '" + k + "'");
}

} // namespace

std::size_t count_branches(const CompiledTemplate& t)
{
    return t.root ? count_branch_nodes(*t.root) : 0;
}

std::string serialize_template(const CompiledTemplate& t)
{
    json j;
    j["version"] = 1;
    j["language"] = t.language;
    j["format"] = to_string(t.format);
    j["root"] = node_to_json(*t.root);
    return j.dump(2) + "\n";
}

CompiledTemplate parse_template(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        bad_template(e.what());
    }
    if (!j.is_object() || !j.contains("version") || !j["version"].is_number_integer())
        bad_template("missing version");
    if (j["version"].get<int>() != 1)
        bad_template("unsupported version " + j["version"].dump());
    if (!j.contains("language") || !j["language"].is_string()
        || !j.contains("format") || !j["format"].is_string() || !j.contains("root"))
        bad_template("missing language, format or root");

    CompiledTemplate t;
    t.language = j["language"].get<std::string>();
    std::optional<OutputFormat> fmt = format_from_string(j["format"].get<std::string>());
    if (!fmt)
        bad_template("unknown format " + j["format"].dump());
    t.format = *fmt;
    t.root = node_from_json(j["root"]);
    return t;
}

std::uint64_t CompileKey::content_hash() const
{
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&h](const char* data, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i) {
            h ^= static_cast<unsigned char>(data[i]);
            h *= 1099511628211ULL;
        }
        h ^= 0xFFu;
        h *= 1099511628211ULL;
    };
    mix(expr_xml.data(), expr_xml.size());
    mix(language.data(), language.size());
    char f = static_cast<char>(format);
    mix(&f, 1);
    return h;
}

CompileKey make_compile_key(const OMPtr& expr, const std::string& language, OutputFormat format)
{
    return CompileKey{serialize_om(expr), language, format};
}

CompileCache::CompileCache(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

std::shared_ptr<const CompiledTemplate> CompileCache::lookup(const CompileKey& key)
{
    auto bucket = index_.find(key.content_hash());
    if (bucket == index_.end())
        return nullptr;
    for (auto it : bucket->second) {
        if (it->key == key) {
            entries_.splice(entries_.begin(), entries_, it);
            return it->value;
        }
    }
    return nullptr;
}

void CompileCache::insert_if_absent(const CompileKey& key, std::shared_ptr<const CompiledTemplate>& value)
{
    if (auto existing = lookup(key)) {
        value = existing;   // a concurrent compile won the race; keep its result
        return;
    }
    entries_.push_front(Entry{key, value});
    index_[key.content_hash()].push_back(entries_.begin());

    if (entries_.size() > capacity_) {
        auto last = std::prev(entries_.end());
        auto bucket = index_.find(last->key.content_hash());
        auto& vec = bucket->second;
        vec.erase(std::find(vec.begin(), vec.end(), last));
        if (vec.empty())
            index_.erase(bucket);
        entries_.pop_back();
    }
}

std::shared_ptr<const CompiledTemplate> CompileCache::get_or_compile(const OMPtr& expr,
                                                                     const NotationStore& store,
                                                                     const std::string& language,
                                                                     OutputFormat format,
                                                                     const EngineOptions& options)
{
    CompileKey key = make_compile_key(expr, language, format);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (auto found = lookup(key)) {
            ++hits_;
            return found;
        }
        ++misses_;
    }

    auto value = std::make_shared<const CompiledTemplate>(compile(expr, store, language, format, options));

    std::lock_guard<std::mutex> lock(mutex_);
    insert_if_absent(key, value);
    return value;
}

std::size_t CompileCache::size() const
{
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

std::uint64_t CompileCache::hits() const
{
    std::lock_guard<std::mutex> lock(mutex_);
    return hits_;
}

std::uint64_t CompileCache::misses() const
{
    std::lock_guard<std::mutex> lock(mutex_);
    return misses_;
}

} // namespace notemill
