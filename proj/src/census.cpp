#include "notemill/census.hpp"

#include <filesystem>
#include <set>

#include "notemill/context.hpp"
#include "notemill/om.hpp"
#include "notemill/xml.hpp"

#include <json.hpp>

namespace notemill {

CensusParseError::CensusParseError(std::string path_, const std::string& reason_)
    : std::runtime_error(path_.empty() ? reason_ : path_ + ": " + reason_),
      path(std::move(path_)), reason(reason_)
{
}

ImportError::ImportError(const std::string& reason) : std::runtime_error(reason) {}

namespace {

using nlohmann::json;

std::string required_string(const json& obj, const std::string& path, const char* field)
{
    if (!obj.contains(field))
        throw CensusParseError(path, std::string("missing required field '") + field + "'");
    const json& v = obj[field];
    if (!v.is_string())
        throw CensusParseError(path, std::string("field '") + field + "' must be a string");
    return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const std::string& path, const char* field)
{
    if (!obj.contains(field))
        return std::nullopt;
    const json& v = obj[field];
    if (!v.is_string())
        throw CensusParseError(path, std::string("field '") + field + "' must be a string");
    return v.get<std::string>();
}

void warn_unknown_fields(const json& obj, const std::string& path,
                         std::initializer_list<const char*> known,
                         std::vector<std::string>& warnings)
{
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k)
                ok = true;
        if (!ok)
            warnings.push_back("unknown field '" + key + "' at " + path);
    }
}

bool is_semantic_ref(const std::string& s)
{
    std::size_t slash = s.find('/');
    if (slash == std::string::npos || s.find('/', slash + 1) != std::string::npos)
        return false;
    return is_identifier(s.substr(0, slash)) && is_identifier(s.substr(slash + 1));
}

} // namespace

ParsedCensus parse_census(const std::string& json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw CensusParseError("", e.what());
    }
    if (!doc.is_object())
        throw CensusParseError("", "census must be a JSON object");
    if (!doc.contains("sources") || !doc["sources"].is_array())
        throw CensusParseError("", "census requires a 'sources' array");
    if (!doc.contains("observations") || !doc["observations"].is_array())
        throw CensusParseError("", "census requires an 'observations' array");

    ParsedCensus out;
    warn_unknown_fields(doc, "$", {"sources", "observations"}, out.warnings);

    std::size_t i = 0;
    for (const json& s : doc["sources"]) {
        std::string path = "sources[" + std::to_string(i++) + "]";
        if (!s.is_object())
            throw CensusParseError(path, "source must be an object");
        Source src;
        src.key = required_string(s, path, "key");
        src.title = required_string(s, path, "title");
        src.culture = required_string(s, path, "culture");
        src.publisher_url = optional_string(s, path, "publisher_url");
        src.download_url = optional_string(s, path, "download_url");
        warn_unknown_fields(s, path, {"key", "title", "culture", "publisher_url", "download_url"},
                            out.warnings);
        out.census.sources.push_back(std::move(src));
    }

    i = 0;
    for (const json& o : doc["observations"]) {
        std::string path = "observations[" + std::to_string(i++) + "]";
        if (!o.is_object())
            throw CensusParseError(path, "observation must be an object");
        Observation obs;
        obs.id = required_string(o, path, "id");
        obs.semantic = required_string(o, path, "semantic");
        obs.culture = required_string(o, path, "culture");
        obs.symbol_name = required_string(o, path, "symbol_name");
        obs.source_key = required_string(o, path, "source_key");
        obs.locator = required_string(o, path, "locator");
        obs.image = required_string(o, path, "image");
        obs.unicode_repr = optional_string(o, path, "unicode_repr");
        obs.description = optional_string(o, path, "description");
        warn_unknown_fields(o, path,
                            {"id", "semantic", "culture", "symbol_name", "source_key", "locator",
                             "image", "unicode_repr", "description"},
                            out.warnings);
        out.census.observations.push_back(std::move(obs));
    }
    return out;
}

std::string serialize_census(const Census& c)
{
    json doc;
    doc["sources"] = json::array();
    for (const Source& s : c.sources) {
        json j;
        j["key"] = s.key;
        j["title"] = s.title;
        j["culture"] = s.culture;
        if (s.publisher_url)
            j["publisher_url"] = *s.publisher_url;
        if (s.download_url)
            j["download_url"] = *s.download_url;
        doc["sources"].push_back(std::move(j));
    }
    doc["observations"] = json::array();
    for (const Observation& o : c.observations) {
        json j;
        j["id"] = o.id;
        j["semantic"] = o.semantic;
        j["culture"] = o.culture;
        j["symbol_name"] = o.symbol_name;
        j["source_key"] = o.source_key;
        j["locator"] = o.locator;
        j["image"] = o.image;
        if (o.unicode_repr)
            j["unicode_repr"] = *o.unicode_repr;
        if (o.description)
            j["description"] = *o.description;
        doc["observations"].push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

std::vector<Finding> validate_census(const Census& c, const std::optional<std::string>& assets_root)
{
    std::vector<Finding> findings;
    auto add = [&](const char* code, const std::string& path, std::string message) {
        findings.push_back(Finding{code, path, std::move(message)});
    };

    std::set<std::string> source_keys;
    std::set<std::string> seen_source_keys;
    std::size_t i = 0;
    for (const Source& s : c.sources) {
        std::string path = "sources[" + std::to_string(i++) + "]";
        if (s.key.empty())
            add("E003", path, "empty required field 'key'");
        if (s.title.empty())
            add("E003", path, "empty required field 'title'");
        if (s.culture.empty())
            add("E003", path, "empty required field 'culture'");
        if (!s.key.empty()) {
            // the finding catalog has one duplicate-id code; source keys share it
            if (!seen_source_keys.insert(s.key).second)
                add("E004", path, "duplicate source key '" + s.key + "'");
            source_keys.insert(s.key);
        }
    }

    std::set<std::string> seen_ids;
    i = 0;
    for (const Observation& o : c.observations) {
        std::string path = "observations[" + std::to_string(i++) + "]";
        if (o.id.empty())
            add("E003", path, "empty required field 'id'");
        else if (!seen_ids.insert(o.id).second)
            add("E004", path, "duplicate observation id '" + o.id + "'");

        if (o.semantic.empty())
            add("E003", path, "empty required field 'semantic'");
        else if (!is_semantic_ref(o.semantic))
            add("E002", path, "semantic '" + o.semantic + "' is not of the form cd/name");

        if (o.culture.empty())
            add("E003", path, "empty required field 'culture'");
        if (o.symbol_name.empty())
            add("E003", path, "empty required field 'symbol_name'");

        if (o.source_key.empty())
            add("E003", path, "empty required field 'source_key'");
        else if (!source_keys.contains(o.source_key))
            add("E001", path, "source_key '" + o.source_key + "' does not name a source");

        if (o.locator.empty())
            add("E003", path, "empty required field 'locator'");
        if (o.image.empty())
            add("E003", path, "empty required field 'image'");

        if (!o.unicode_repr || o.unicode_repr->empty())
            add("W001", path, "missing unicode_repr");
        if (assets_root && !o.image.empty()) {
            std::filesystem::path img = std::filesystem::path(*assets_root) / o.image;
            if (!std::filesystem::exists(img))
                add("W002", path, "image file '" + o.image + "' not found under assets root");
        }
    }
    return findings;
}

CensusStats census_stats(const Census& c)
{
    CensusStats s;
    s.observation_count = c.observations.size();
    s.source_count = c.sources.size();
    std::map<std::string, std::set<std::string>> cultures_per_semantic;
    for (const Observation& o : c.observations) {
        ++s.per_semantic[o.semantic];
        ++s.per_culture[o.culture];
        cultures_per_semantic[o.semantic].insert(o.culture);
    }
    for (const auto& [semantic, cultures] : cultures_per_semantic)
        if (cultures.size() >= 2)
            ++s.multicultural_semantics;
    return s;
}

std::string format_stats(const CensusStats& s)
{
    std::string out;
    out += "observations: " + std::to_string(s.observation_count) + "\n";
    out += "sources: " + std::to_string(s.source_count) + "\n";
    out += "semantics with >=2 cultures: " + std::to_string(s.multicultural_semantics) + "\n";
    out += "per semantic:\n";
    for (const auto& [semantic, count] : s.per_semantic)
        out += "  " + semantic + ": " + std::to_string(count) + "\n";
    out += "per culture:\n";
    for (const auto& [culture, count] : s.per_culture)
        out += "  " + culture + ": " + std::to_string(count) + "\n";
    return out;
}

std::string import_observation(const Census& census, const Observation& o)
{
    Census probe;
    probe.sources = census.sources;
    probe.observations.push_back(o);
    for (const Finding& f : validate_census(probe))
        if (f.is_error())
            throw ImportError("observation '" + o.id + "' has finding " + f.code + ": " + f.message);

    std::string lang = o.culture.substr(0, o.culture.find('-'));
    if (!is_language_tag(lang))
        throw ImportError("culture '" + o.culture + "' has no usable language subtag");

    std::size_t slash = o.semantic.find('/');
    std::string cd = o.semantic.substr(0, slash);
    std::string name = o.semantic.substr(slash + 1);

    XmlNode root = XmlNode::elem("notations");
    XmlNode notation = XmlNode::elem("notation");
    notation.attrs.emplace_back("id", "draft-" + o.id);
    notation.attrs.emplace_back("draft", "true");
    notation.attrs.emplace_back("observation", o.id);
    notation.children.push_back(XmlNode::comment("source: " + o.source_key + " " + o.locator));

    XmlNode proto = XmlNode::elem("prototype");
    XmlNode sym = XmlNode::elem("OMS");
    sym.attrs.emplace_back("cd", cd);
    sym.attrs.emplace_back("name", name);
    proto.children.push_back(std::move(sym));
    notation.children.push_back(std::move(proto));

    XmlNode rendering = XmlNode::elem("rendering");
    rendering.attrs.emplace_back("lang", lang);
    rendering.attrs.emplace_back("precedence", "500");
    XmlNode body = XmlNode::elem("mtext");
    const std::string& repr = (o.unicode_repr && !o.unicode_repr->empty()) ? *o.unicode_repr : o.symbol_name;
    body.children.push_back(XmlNode::text_node(repr));
    rendering.children.push_back(std::move(body));
    notation.children.push_back(std::move(rendering));

    root.children.push_back(std::move(notation));
    return serialize_xml(root) + "\n";
}

} // namespace notemill
