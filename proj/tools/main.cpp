#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "notemill/census.hpp"
#include "notemill/compile.hpp"
#include "notemill/render.hpp"

namespace {

// 0 success, 1 usage, 2 input parse, 3 E-findings, 4 internal.
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kInputError = 2;
constexpr int kFindings = 3;
constexpr int kInternal = 4;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_input(const std::string& path)
{
    if (path == "-") {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        return buf.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_output(const std::string& out_path, const std::string& payload)
{
    if (out_path.empty()) {
        std::cout << payload;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + out_path);
    out << payload;
}

notemill::EngineOptions engine_options()
{
    notemill::EngineOptions options;
    if (const char* env = std::getenv("NOTEMILL_LOCALES")) {
        std::string text = read_input(env);
        try {
            options.locales = notemill::load_locale_table(text);
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
    }
    return options;
}

notemill::OMPtr read_expression(const std::string& path, bool compact)
{
    std::string text = read_input(path);
    return compact ? notemill::parse_compact(text) : notemill::parse_om(text);
}

struct RenderArgs {
    std::string expr_path;
    bool compact = false;
    std::string notations_dir;
    std::string lang;
    std::string format = "mathml";
    int level = 1;
    std::string collection;
    std::string out_path;
    bool allow_drafts = false;
};

int run_render(const RenderArgs& a)
{
    notemill::EngineOptions options = engine_options();
    notemill::OMPtr expr = read_expression(a.expr_path, a.compact);
    notemill::NotationStore store =
        notemill::load_notations_dir(a.notations_dir, {a.allow_drafts});
    for (const std::string& w : store.warnings())
        std::cerr << "warning: " << w << "\n";
    notemill::RenderContext ctx =
        notemill::make_context(a.lang, *notemill::format_from_string(a.format), a.level, a.collection);
    notemill::PresNode out = notemill::render(expr, store, ctx, options);
    write_output(a.out_path, notemill::serialize_pres(out, ctx.format) + "\n");
    return kOk;
}

int run_compile(const RenderArgs& a)
{
    notemill::EngineOptions options = engine_options();
    notemill::OMPtr expr = read_expression(a.expr_path, a.compact);
    notemill::NotationStore store =
        notemill::load_notations_dir(a.notations_dir, {a.allow_drafts});
    for (const std::string& w : store.warnings())
        std::cerr << "warning: " << w << "\n";
    notemill::CompiledTemplate t = notemill::compile(
        expr, store, a.lang, *notemill::format_from_string(a.format), options);
    write_output(a.out_path, notemill::serialize_template(t));
    return kOk;
}

struct DeliverArgs {
    std::string template_path;
    int level = 1;
    std::string collection;
    std::string out_path;
};

int run_deliver(const DeliverArgs& a)
{
    std::string text = read_input(a.template_path);
    notemill::CompiledTemplate t;
    try {
        t = notemill::parse_template(text);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    notemill::PresNode out = notemill::deliver(t, a.level, a.collection);
    write_output(a.out_path, notemill::serialize_pres(out, t.format) + "\n");
    return kOk;
}

notemill::ParsedCensus read_census(const std::string& path)
{
    std::string text = read_input(path);
    notemill::ParsedCensus parsed = notemill::parse_census(text);
    for (const std::string& w : parsed.warnings)
        std::cerr << "warning: " << w << "\n";
    return parsed;
}

int run_census_validate(const std::string& path, const std::string& assets_dir)
{
    notemill::ParsedCensus parsed = read_census(path);
    std::optional<std::string> assets;
    if (!assets_dir.empty())
        assets = assets_dir;
    std::vector<notemill::Finding> findings = notemill::validate_census(parsed.census, assets);
    bool errors = false;
    for (const notemill::Finding& f : findings) {
        std::cout << f.code << " " << f.path << ": " << f.message << "\n";
        errors = errors || f.is_error();
    }
    return errors ? kFindings : kOk;
}

int run_census_stats(const std::string& path)
{
    notemill::ParsedCensus parsed = read_census(path);
    std::cout << notemill::format_stats(notemill::census_stats(parsed.census));
    return kOk;
}

int run_census_import(const std::string& path, const std::string& out_dir, bool allow_drafts)
{
    notemill::ParsedCensus parsed = read_census(path);

    std::vector<notemill::Finding> findings = notemill::validate_census(parsed.census);
    bool errors = false;
    for (const notemill::Finding& f : findings) {
        if (!f.is_error())
            continue;
        std::cout << f.code << " " << f.path << ": " << f.message << "\n";
        errors = true;
    }
    if (errors)
        return kFindings;

    std::filesystem::create_directories(out_dir);
    for (const notemill::Observation& o : parsed.census.observations) {
        std::string doc = notemill::import_observation(parsed.census, o);
        std::filesystem::path file = std::filesystem::path(out_dir) / ("draft-" + o.id + ".xml");
        write_output(file.string(), doc);
        std::cout << file.string() << "\n";
    }

    if (allow_drafts) {
        // read the emitted drafts back through the loader as a sanity pass
        notemill::NotationStore store = notemill::load_notations_dir(out_dir, {true});
        for (const std::string& w : store.warnings())
            std::cerr << "warning: " << w << "\n";
    }
    return kOk;
}

const CLI::Validator LanguageTag(
    [](std::string& s) {
        return notemill::is_language_tag(s) ? std::string()
                                            : "'" + s + "' is not a lowercase language tag";
    },
    "LANG");

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"context-aware rendering of OpenMath expressions"};
    app.require_subcommand(1);

    RenderArgs render_args;
    CLI::App* render_cmd = app.add_subcommand("render", "render an expression for a context");
    render_cmd->add_option("--expr", render_args.expr_path, "expression file, or - for stdin")->required();
    render_cmd->add_flag("--compact", render_args.compact, "expression uses the compact syntax");
    render_cmd->add_option("--notations", render_args.notations_dir, "notation definition directory")->required();
    render_cmd->add_option("--lang", render_args.lang, "language tag")->required()->check(LanguageTag);
    render_cmd->add_option("--format", render_args.format, "mathml, latex or text")
        ->required()
        ->check(CLI::IsMember({"mathml", "latex", "text"}));
    render_cmd->add_option("--level", render_args.level, "educational level 1..4")
        ->required()
        ->check(CLI::Range(1, 4));
    render_cmd->add_option("--collection", render_args.collection, "collection id");
    render_cmd->add_option("--out", render_args.out_path, "output file (default stdout)");
    render_cmd->add_flag("--allow-drafts", render_args.allow_drafts, "accept draft notations");

    RenderArgs compile_args;
    CLI::App* compile_cmd = app.add_subcommand("compile", "compile an expression for language and format");
    compile_cmd->add_option("--expr", compile_args.expr_path, "expression file, or - for stdin")->required();
    compile_cmd->add_flag("--compact", compile_args.compact, "expression uses the compact syntax");
    compile_cmd->add_option("--notations", compile_args.notations_dir, "notation definition directory")->required();
    compile_cmd->add_option("--lang", compile_args.lang, "language tag")->required()->check(LanguageTag);
    compile_cmd->add_option("--format", compile_args.format, "mathml, latex or text")
        ->required()
        ->check(CLI::IsMember({"mathml", "latex", "text"}));
    compile_cmd->add_option("--out", compile_args.out_path, "template file")->required();
    compile_cmd->add_flag("--allow-drafts", compile_args.allow_drafts, "accept draft notations");

    DeliverArgs deliver_args;
    CLI::App* deliver_cmd = app.add_subcommand("deliver", "deliver a compiled template");
    deliver_cmd->add_option("--template", deliver_args.template_path, "compiled template file")->required();
    deliver_cmd->add_option("--level", deliver_args.level, "educational level 1..4")
        ->required()
        ->check(CLI::Range(1, 4));
    deliver_cmd->add_option("--collection", deliver_args.collection, "collection id");
    deliver_cmd->add_option("--out", deliver_args.out_path, "output file (default stdout)");

    CLI::App* census_cmd = app.add_subcommand("census", "census file toolkit");
    census_cmd->require_subcommand(1);

    std::string census_file;
    std::string assets_dir;
    CLI::App* validate_cmd = census_cmd->add_subcommand("validate", "check a census file");
    validate_cmd->add_option("file", census_file, "census JSON file")->required();
    validate_cmd->add_option("--assets", assets_dir, "root directory for image references");

    std::string stats_file;
    CLI::App* stats_cmd = census_cmd->add_subcommand("stats", "summarize a census file");
    stats_cmd->add_option("file", stats_file, "census JSON file")->required();

    std::string import_file;
    std::string import_out;
    bool import_allow_drafts = false;
    CLI::App* import_cmd = census_cmd->add_subcommand("import", "emit draft notations for observations");
    import_cmd->add_option("file", import_file, "census JSON file")->required();
    import_cmd->add_option("--out", import_out, "directory for draft notation files")->required();
    import_cmd->add_flag("--allow-drafts", import_allow_drafts, "reload the emitted drafts as a check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (render_cmd->parsed())
            return run_render(render_args);
        if (compile_cmd->parsed())
            return run_compile(compile_args);
        if (deliver_cmd->parsed())
            return run_deliver(deliver_args);
        if (validate_cmd->parsed())
            return run_census_validate(census_file, assets_dir);
        if (stats_cmd->parsed())
            return run_census_stats(stats_file);
        if (import_cmd->parsed())
            return run_census_import(import_file, import_out, import_allow_drafts);
        std::cerr << "error: no subcommand\n";
        return kUsage;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const notemill::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const notemill::NotationFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const notemill::DuplicateIdError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const notemill::CensusParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const notemill::ImportError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFindings;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}
