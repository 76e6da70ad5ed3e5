#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "notemill/compile.hpp"
#include "notemill/matcher.hpp"
#include "oracles.hpp"

using namespace notemill;

namespace {

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const NotationStore& corpus()
{
    static NotationStore store = load_notations_dir(CORPUS_DIR "/notations");
    return store;
}

OMPtr corpus_expr(const std::string& name)
{
    return parse_om(slurp(std::filesystem::path(CORPUS_DIR) / "expressions" / (name + ".om.xml")));
}

std::vector<std::string> corpus_expr_names()
{
    std::vector<std::string> names;
    for (const auto& entry :
         std::filesystem::directory_iterator(std::filesystem::path(CORPUS_DIR) / "expressions")) {
        std::string file = entry.path().filename().string();
        if (auto pos = file.find(".om.xml"); pos != std::string::npos)
            names.push_back(file.substr(0, pos));
    }
    REQUIRE(names.size() == 13);
    return names;
}

} // namespace

TEST_CASE("static contexts compile away, dynamic ones become branches")
{
    CompiledTemplate flat = compile(corpus_expr("times_plus"), corpus(), "en", OutputFormat::latex);
    CHECK(count_branches(flat) == 0);

    // level-dependent only for German
    CHECK(count_branches(compile(corpus_expr("naturals"), corpus(), "de", OutputFormat::latex)) == 1);
    CHECK(count_branches(compile(corpus_expr("naturals"), corpus(), "en", OutputFormat::latex)) == 0);

    // collection-dependent everywhere
    CHECK(count_branches(compile(corpus_expr("imaginary"), corpus(), "en", OutputFormat::mathml)) == 1);

    CHECK(count_branches(compile(corpus_expr("diff_in_product"), corpus(), "fr", OutputFormat::text)) == 1);
}

TEST_CASE("deliver equals the direct renderer across the dynamic grid")
{
    EngineOptions options;
    for (const std::string& name : corpus_expr_names()) {
        OMPtr expr = corpus_expr(name);
        for (const char* lang : {"en", "de"})
            for (OutputFormat format : {OutputFormat::mathml, OutputFormat::latex, OutputFormat::text}) {
                CompiledTemplate t = compile(expr, corpus(), lang, format, options);
                for (int level = 1; level <= 4; ++level)
                    for (const char* coll : {"", "ee-handbook"}) {
                        PresNode delivered = deliver(t, level, coll);
                        PresNode direct = render(expr, corpus(),
                                                 make_context(lang, format, level, coll), options);
                        CHECK_MESSAGE(serialize_pres(delivered, format) ==
                                          serialize_pres(direct, format),
                                      name << " " << lang << " level " << level);
                    }
            }
    }
}

TEST_CASE("deliver never invokes the matcher")
{
    CompiledTemplate t = compile(corpus_expr("diff_in_product"), corpus(), "de", OutputFormat::latex);
    reset_matcher_invocations();
    for (int level = 1; level <= 4; ++level)
        deliver(t, level, "ee-handbook");
    CHECK(matcher_invocations() == 0);
}

TEST_CASE("deliver validates the level")
{
    CompiledTemplate t = compile(corpus_expr("imaginary"), corpus(), "en", OutputFormat::text);
    CHECK_THROWS_AS(deliver(t, 0), std::invalid_argument);
    CHECK_THROWS_AS(deliver(t, 5), std::invalid_argument);
}

TEST_CASE("compiled templates survive the JSON round-trip")
{
    for (const char* name : {"naturals", "imaginary", "diff_in_product", "sum_mixed", "exists_sq"}) {
        OMPtr expr = corpus_expr(name);
        CompiledTemplate t = compile(expr, corpus(), "de", OutputFormat::latex);
        std::string text = serialize_template(t);
        CompiledTemplate back = parse_template(text);

        CHECK(back.language == t.language);
        CHECK(back.format == t.format);
        CHECK(serialize_template(back) == text);
        for (int level = 1; level <= 4; ++level)
            for (const char* coll : {"", "ee-handbook"})
                CHECK(serialize_pres(deliver(back, level, coll), back.format) ==
                      serialize_pres(deliver(t, level, coll), t.format));
    }
}

TEST_CASE("template parsing rejects foreign and damaged artifacts")
{
    CompiledTemplate t = compile(corpus_expr("imaginary"), corpus(), "en", OutputFormat::text);
    std::string good = serialize_template(t);

    CHECK_THROWS_AS(parse_template("droppings"), std::invalid_argument);
    CHECK_THROWS_AS(parse_template("{}"), std::invalid_argument);
    CHECK_THROWS_AS(parse_template("[1,2,3]"), std::invalid_argument);

    auto doc = nlohmann::json::parse(good);
    doc["version"] = 99;
    CHECK_THROWS_AS(parse_template(doc.dump()), std::invalid_argument);

    doc = nlohmann::json::parse(good);
    doc["format"] = "pdf";
    CHECK_THROWS_AS(parse_template(doc.dump()), std::invalid_argument);

    doc = nlohmann::json::parse(good);
    doc.erase("root");
    CHECK_THROWS_AS(parse_template(doc.dump()), std::invalid_argument);
}

TEST_CASE("compile keys hash content, not object identity")
{
    OMPtr a = parse_compact("arith1/plus(1,2)");
    OMPtr b = parse_om("<OMOBJ><OMA><OMS cd=\"arith1\" name=\"plus\"/>"
                       "<OMI>1</OMI><OMI>2</OMI></OMA></OMOBJ>");
    CompileKey ka = make_compile_key(a, "en", OutputFormat::latex);
    CompileKey kb = make_compile_key(b, "en", OutputFormat::latex);
    CHECK(ka == kb);
    CHECK(ka.content_hash() == kb.content_hash());

    CHECK_FALSE(ka == make_compile_key(a, "de", OutputFormat::latex));
    CHECK_FALSE(ka == make_compile_key(a, "en", OutputFormat::mathml));
    CHECK(ka.content_hash() != make_compile_key(a, "de", OutputFormat::latex).content_hash());
}

TEST_CASE("the cache is a bounded LRU with full-key confirmation")
{
    CompileCache cache(3);
    const NotationStore& store = corpus();

    OMPtr e1 = parse_compact("nums1/pi");
    OMPtr e2 = parse_compact("nums1/i");
    OMPtr e3 = parse_compact("setname1/N");
    OMPtr e4 = parse_compact("arith1/plus(1,2)");

    auto t1 = cache.get_or_compile(e1, store, "en", OutputFormat::text);
    auto t2 = cache.get_or_compile(e2, store, "en", OutputFormat::text);
    auto t3 = cache.get_or_compile(e3, store, "en", OutputFormat::text);
    CHECK(cache.size() == 3);
    CHECK(cache.misses() == 3);
    CHECK(cache.hits() == 0);

    // a hit returns the identical object and refreshes recency
    CHECK(cache.get_or_compile(e1, store, "en", OutputFormat::text).get() == t1.get());
    CHECK(cache.hits() == 1);

    // inserting a fourth entry evicts the least recently used (e2)
    cache.get_or_compile(e4, store, "en", OutputFormat::text);
    CHECK(cache.size() == 3);
    CHECK(cache.get_or_compile(e1, store, "en", OutputFormat::text).get() == t1.get());
    CHECK(cache.get_or_compile(e2, store, "en", OutputFormat::text).get() != t2.get());
    CHECK(cache.misses() == 5);

    // the same expression under another static context is a different entry
    CompileCache wide(10);
    auto en = wide.get_or_compile(e1, store, "en", OutputFormat::text);
    auto de = wide.get_or_compile(e1, store, "de", OutputFormat::text);
    CHECK(en.get() != de.get());
    CHECK(wide.size() == 2);

    // capacity zero still holds one entry
    CompileCache tiny(0);
    tiny.get_or_compile(e1, store, "en", OutputFormat::text);
    CHECK(tiny.size() == 1);
}

TEST_CASE("concurrent cache users agree with the direct renderer")
{
    CompileCache cache(16);
    const NotationStore& store = corpus();
    std::vector<std::string> names = corpus_expr_names();

    std::vector<OMPtr> exprs;
    for (const auto& name : names)
        exprs.push_back(corpus_expr(name));

    std::vector<std::string> expected;
    for (const auto& expr : exprs)
        expected.push_back(serialize_pres(
            render(expr, store, make_context("de", OutputFormat::latex, 3, "ee-handbook")),
            OutputFormat::latex));

    std::atomic<int> mismatches{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < 8; ++w)
        workers.emplace_back([&] {
            for (int round = 0; round < 50; ++round)
                for (std::size_t i = 0; i < exprs.size(); ++i) {
                    auto t = cache.get_or_compile(exprs[i], store, "de", OutputFormat::latex);
                    if (serialize_pres(deliver(*t, 3, "ee-handbook"), OutputFormat::latex) !=
                        expected[i])
                        ++mismatches;
                }
        });
    for (auto& w : workers)
        w.join();

    CHECK(mismatches == 0);
    CHECK(cache.size() == exprs.size());
    CHECK(cache.hits() + cache.misses() == 8 * 50 * exprs.size());
    CHECK(cache.misses() >= exprs.size());
}
