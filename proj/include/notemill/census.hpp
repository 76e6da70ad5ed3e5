#ifndef NOTEMILL_CENSUS_HPP
#define NOTEMILL_CENSUS_HPP

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace notemill {

struct Source {
    std::string key;
    std::string title;
    std::string culture;
    std::optional<std::string> publisher_url;
    std::optional<std::string> download_url;

    bool operator==(const Source&) const = default;
};

struct Observation {
    std::string id;
    std::string semantic;      // "cd/name"
    std::string culture;       // convention: lang[-qualifier]
    std::string symbol_name;
    std::string source_key;
    std::string locator;       // page number or internal reference
    std::string image;         // relative path to the graphics copy
    std::optional<std::string> unicode_repr;
    std::optional<std::string> description;

    bool operator==(const Observation&) const = default;
};

struct Census {
    std::vector<Source> sources;
    std::vector<Observation> observations;

    bool operator==(const Census&) const = default;
};

class CensusParseError : public std::runtime_error {
public:
    CensusParseError(std::string path, const std::string& reason);
    std::string path;
    std::string reason;
};

struct ParsedCensus {
    Census census;
    std::vector<std::string> warnings;   // unknown fields, one entry each
};

ParsedCensus parse_census(const std::string& json_text);
std::string serialize_census(const Census& c);

// E001 dangling source_key, E002 malformed semantic, E003 empty required
// field, E004 duplicate id, W001 missing unicode_repr, W002 image missing
// on disk (assets_root given).
struct Finding {
    std::string code;
    std::string path;
    std::string message;

    bool is_error() const { return !code.empty() && code[0] == 'E'; }
};

std::vector<Finding> validate_census(const Census& c,
                                     const std::optional<std::string>& assets_root = std::nullopt);

struct CensusStats {
    std::size_t observation_count = 0;
    std::size_t source_count = 0;
    std::map<std::string, std::size_t> per_semantic;
    std::map<std::string, std::size_t> per_culture;
    std::size_t multicultural_semantics = 0;   // semantics seen in >= 2 cultures
};

CensusStats census_stats(const Census& c);
std::string format_stats(const CensusStats& s);

class ImportError : public std::runtime_error {
public:
    explicit ImportError(const std::string& reason);
};

// Draft notation document for one observation; rejected by the loader
// unless drafts are allowed. Throws ImportError when the observation has
// E-findings within the census or no usable language subtag.
std::string import_observation(const Census& census, const Observation& o);

} // namespace notemill

#endif
