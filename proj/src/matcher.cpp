#include "notemill/matcher.hpp"

#include <atomic>

namespace notemill {

namespace {

std::atomic<std::uint64_t> g_matcher_invocations{0};

bool match_node(const PatNode& pat, const OMPtr& expr, Bindings& out);

bool match_apply(const PatNode& pat, const OMPtr& expr, Bindings& out)
{
    if (expr->kind != OMKind::apply)
        return false;
    if (!match_node(*pat.head, expr->head, out))
        return false;

    std::size_t n = pat.args.size();
    bool trailing_sequence = n > 0 && pat.args[n - 1]->kind == PatNode::Kind::slot
                             && pat.args[n - 1]->slot_kind == SlotKind::sequence;
    std::size_t fixed = trailing_sequence ? n - 1 : n;

    if (trailing_sequence ? expr->args.size() < fixed : expr->args.size() != fixed)
        return false;

    for (std::size_t i = 0; i < fixed; ++i)
        if (!match_node(*pat.args[i], expr->args[i], out))
            return false;

    if (trailing_sequence) {
        BoundValue v;
        v.is_sequence = true;
        v.items.assign(expr->args.begin() + static_cast<std::ptrdiff_t>(fixed), expr->args.end());
        out.by_name.emplace(pat.args[n - 1]->slot_name, std::move(v));
    }
    return true;
}

bool match_bind(const PatNode& pat, const OMPtr& expr, Bindings& out)
{
    if (expr->kind != OMKind::bind)
        return false;
    if (!match_node(*pat.head, expr->head, out))
        return false;
    if (pat.args.size() != expr->bound_vars().size())
        return false;
    for (std::size_t i = 0; i < pat.args.size(); ++i)
        if (!match_node(*pat.args[i], expr->bound_vars()[i], out))
            return false;
    return match_node(*pat.body, expr->body, out);
}

bool match_node(const PatNode& pat, const OMPtr& expr, Bindings& out)
{
    switch (pat.kind) {
    case PatNode::Kind::exact:
        return om_equal(pat.exact, expr);
    case PatNode::Kind::slot: {
        BoundValue v;
        v.single = expr;
        out.by_name.emplace(pat.slot_name, std::move(v));
        return true;
    }
    case PatNode::Kind::apply:
        return match_apply(pat, expr, out);
    case PatNode::Kind::bind:
        return match_bind(pat, expr, out);
    }
    return false;
}

} // namespace

const BoundValue* Bindings::find(const std::string& name) const
{
    auto it = by_name.find(name);
    return it == by_name.end() ? nullptr : &it->second;
}

std::optional<Bindings> match_prototype(const Prototype& proto, const OMPtr& expr)
{
    g_matcher_invocations.fetch_add(1, std::memory_order_relaxed);
    Bindings b;
    if (!match_node(*proto.root, expr, b))
        return std::nullopt;
    return b;
}

std::uint64_t matcher_invocations()
{
    return g_matcher_invocations.load(std::memory_order_relaxed);
}

void reset_matcher_invocations()
{
    g_matcher_invocations.store(0, std::memory_order_relaxed);
}

} // namespace notemill
