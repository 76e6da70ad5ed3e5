#include "notemill/context.hpp"

#include <stdexcept>

namespace notemill {

std::string to_string(OutputFormat f)
{
    switch (f) {
    case OutputFormat::mathml: return "mathml";
    case OutputFormat::latex: return "latex";
    case OutputFormat::text: return "text";
    }
    return "mathml";
}

std::optional<OutputFormat> format_from_string(const std::string& s)
{
    if (s == "mathml")
        return OutputFormat::mathml;
    if (s == "latex")
        return OutputFormat::latex;
    if (s == "text")
        return OutputFormat::text;
    return std::nullopt;
}

bool is_language_tag(const std::string& s)
{
    if (s.size() < 2 || s.size() > 8)
        return false;
    for (char c : s)
        if (c < 'a' || c > 'z')
            return false;
    return true;
}

RenderContext make_context(const std::string& language, OutputFormat format,
                           int level, const std::string& collection)
{
    if (!is_language_tag(language))
        throw std::invalid_argument("bad language tag: " + language);
    if (level < kMinLevel || level > kMaxLevel)
        throw std::invalid_argument("level must be in 1..4");
    return RenderContext{language, format, level, collection};
}

bool ContextConstraint::unconstrained() const
{
    return languages.empty() && formats.empty() && !levels.has_value() && collections.empty();
}

bool eligible(const ContextConstraint& c, const RenderContext& ctx)
{
    if (!c.languages.empty() && !c.languages.contains(ctx.language))
        return false;
    if (!c.formats.empty() && !c.formats.contains(ctx.format))
        return false;
    if (c.levels && !c.levels->contains(ctx.level))
        return false;
    if (!c.collections.empty() && (ctx.collection.empty() || !c.collections.contains(ctx.collection)))
        return false;
    return true;
}

bool specificity_less(const Specificity& a, const Specificity& b, const SpecificityOrder& order)
{
    for (Dimension d : order) {
        if (a[d] != b[d])
            return a[d] < b[d];
    }
    return false;
}

Specificity specificity(const ContextConstraint& c, const RenderContext& ctx)
{
    if (!eligible(c, ctx))
        throw std::logic_error("specificity asked for an ineligible constraint");
    Specificity s;
    s[Dimension::language] = c.languages.empty() ? 0 : 1;
    s[Dimension::format] = c.formats.empty() ? 0 : 1;
    s[Dimension::level] = c.levels ? 1 : 0;
    s[Dimension::collection] = c.collections.empty() ? 0 : 1;
    return s;
}

} // namespace notemill
