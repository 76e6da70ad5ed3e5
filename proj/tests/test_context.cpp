#include <doctest.h>

#include <stdexcept>
#include <vector>

#include "notemill/context.hpp"

using namespace notemill;

namespace {

// Naive restatement of per-dimension eligibility, kept deliberately separate
// from the production predicate.
bool eligible_naive(const ContextConstraint& c, const RenderContext& ctx)
{
    bool lang_ok = c.languages.empty() || c.languages.count(ctx.language) > 0;
    bool fmt_ok = c.formats.empty() || c.formats.count(ctx.format) > 0;
    bool lvl_ok = !c.levels || (c.levels->lo <= ctx.level && ctx.level <= c.levels->hi);
    bool coll_ok = c.collections.empty() ||
                   (!ctx.collection.empty() && c.collections.count(ctx.collection) > 0);
    return lang_ok && fmt_ok && lvl_ok && coll_ok;
}

Specificity from_bits(int coll, int lvl, int lang, int fmt)
{
    Specificity s;
    s[Dimension::collection] = coll;
    s[Dimension::level] = lvl;
    s[Dimension::language] = lang;
    s[Dimension::format] = fmt;
    return s;
}

} // namespace

TEST_CASE("language tags are lowercase ascii, two to eight letters")
{
    CHECK(is_language_tag("en"));
    CHECK(is_language_tag("nds"));
    CHECK(is_language_tag("abcdefgh"));
    CHECK_FALSE(is_language_tag("e"));
    CHECK_FALSE(is_language_tag("abcdefghi"));
    CHECK_FALSE(is_language_tag("EN"));
    CHECK_FALSE(is_language_tag("en-US"));
    CHECK_FALSE(is_language_tag(""));
    CHECK_FALSE(is_language_tag("e1"));
}

TEST_CASE("make_context validates its inputs")
{
    RenderContext ctx = make_context("de", OutputFormat::latex, 2, "ee-handbook");
    CHECK(ctx.language == "de");
    CHECK(ctx.level == 2);
    CHECK_THROWS_AS(make_context("DE", OutputFormat::latex, 2), std::invalid_argument);
    CHECK_THROWS_AS(make_context("de", OutputFormat::latex, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_context("de", OutputFormat::latex, 5), std::invalid_argument);
}

TEST_CASE("format names round-trip")
{
    for (OutputFormat f : {OutputFormat::mathml, OutputFormat::latex, OutputFormat::text})
        CHECK(format_from_string(to_string(f)) == f);
    CHECK_FALSE(format_from_string("html").has_value());
}

TEST_CASE("eligibility agrees with the naive predicate over a small universe")
{
    std::vector<std::set<std::string>> lang_sets = {{}, {"de"}, {"de", "fr"}, {"en"}};
    std::vector<std::set<OutputFormat>> fmt_sets = {{}, {OutputFormat::latex},
                                                    {OutputFormat::mathml, OutputFormat::text}};
    std::vector<std::optional<LevelRange>> level_sets = {std::nullopt, LevelRange{1, 4},
                                                         LevelRange{2, 3}, LevelRange{4, 4}};
    std::vector<std::set<std::string>> coll_sets = {{}, {"ee-handbook"}, {"a", "b"}};

    std::vector<RenderContext> contexts;
    for (const char* lang : {"de", "en", "ru"})
        for (OutputFormat f : {OutputFormat::mathml, OutputFormat::latex, OutputFormat::text})
            for (int level = 1; level <= 4; ++level)
                for (const char* coll : {"", "ee-handbook", "b"})
                    contexts.push_back(RenderContext{lang, f, level, coll});

    int checked = 0;
    for (const auto& langs : lang_sets)
        for (const auto& fmts : fmt_sets)
            for (const auto& levels : level_sets)
                for (const auto& colls : coll_sets) {
                    ContextConstraint c{langs, fmts, levels, colls};
                    for (const auto& ctx : contexts) {
                        CHECK(eligible(c, ctx) == eligible_naive(c, ctx));
                        ++checked;
                    }
                }
    CHECK(checked == 4 * 3 * 4 * 3 * 108);
}

TEST_CASE("an empty context collection never satisfies a collection constraint")
{
    ContextConstraint c;
    c.collections = {"ee-handbook"};
    RenderContext ctx = make_context("en", OutputFormat::mathml, 1, "");
    CHECK_FALSE(eligible(c, ctx));
    ctx.collection = "ee-handbook";
    CHECK(eligible(c, ctx));
}

TEST_CASE("unconstrained means all four dimensions are open")
{
    CHECK(ContextConstraint{}.unconstrained());
    ContextConstraint c;
    c.levels = LevelRange{1, 4};
    CHECK_FALSE(c.unconstrained());
}

TEST_CASE("specificity comparison is lexicographic in the dimension order")
{
    // Oracle: map the bit vector to an integer in priority order; compare.
    auto as_int = [](const Specificity& s, const SpecificityOrder& order) {
        int v = 0;
        for (Dimension d : order)
            v = v * 2 + s[d];
        return v;
    };

    std::vector<SpecificityOrder> orders = {
        default_specificity_order(),
        {Dimension::format, Dimension::language, Dimension::level, Dimension::collection},
        {Dimension::language, Dimension::collection, Dimension::format, Dimension::level},
    };

    std::vector<Specificity> all;
    for (int coll = 0; coll <= 1; ++coll)
        for (int lvl = 0; lvl <= 1; ++lvl)
            for (int lang = 0; lang <= 1; ++lang)
                for (int fmt = 0; fmt <= 1; ++fmt)
                    all.push_back(from_bits(coll, lvl, lang, fmt));

    for (const auto& order : orders)
        for (const auto& a : all)
            for (const auto& b : all)
                CHECK(specificity_less(a, b, order) == (as_int(a, order) < as_int(b, order)));
}

TEST_CASE("under the default order a collection bit beats all others")
{
    Specificity coll_only = from_bits(1, 0, 0, 0);
    Specificity rest = from_bits(0, 1, 1, 1);
    CHECK(specificity_less(rest, coll_only));
    CHECK_FALSE(specificity_less(coll_only, rest));
}

TEST_CASE("specificity reports exactly the constrained dimensions")
{
    RenderContext ctx = make_context("de", OutputFormat::latex, 4, "ee-handbook");
    ContextConstraint c;
    c.languages = {"de"};
    c.levels = LevelRange{3, 4};
    Specificity s = specificity(c, ctx);
    CHECK(s == from_bits(0, 1, 1, 0));

    ContextConstraint everything;
    everything.languages = {"de"};
    everything.formats = {OutputFormat::latex};
    everything.levels = LevelRange{4, 4};
    everything.collections = {"ee-handbook"};
    CHECK(specificity(everything, ctx) == from_bits(1, 1, 1, 1));

    ContextConstraint ineligible;
    ineligible.languages = {"fr"};
    CHECK_THROWS_AS(specificity(ineligible, ctx), std::logic_error);
}
