#ifndef NOTEMILL_RENDER_HPP
#define NOTEMILL_RENDER_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "notemill/context.hpp"
#include "notemill/notation.hpp"
#include "notemill/om.hpp"

namespace notemill {

// Output tree. MathML renders to elements with token leaves; latex/text
// render to "g" group elements whose text leaves concatenate into the
// output string. Fallback wrappers carry a marker for gap detection.
struct PresNode {
    enum class Kind { element, text };

    Kind kind = Kind::text;
    std::string tag;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<PresNode> children;
    std::string text;
    bool fallback_marker = false;

    static PresNode elem(std::string tag);
    static PresNode text_node(std::string text);

    bool operator==(const PresNode&) const = default;
};

struct LocaleNumberSpec {
    std::string decimal_sep = ".";
    std::string group_sep = ",";
    int group_size = 3;
    int min_grouping_digits = 4;
};

using LocaleTable = std::map<std::string, LocaleNumberSpec>;

// en/de/nl/es group-and-comma conventions plus no-break-space grouping for
// fr, fi, hu, ru. Unknown languages fall back to LocaleNumberSpec{}.
const LocaleTable& default_locale_table();

// JSON override file: {"de": {"decimal_sep": ",", "group_sep": ".", ...}}.
// Entries merge over the defaults; throws std::invalid_argument on schema
// or invariant violations (decimal_sep == group_sep, group_size < 2).
LocaleTable load_locale_table(const std::string& json_text, LocaleTable base = default_locale_table());

const LocaleNumberSpec& locale_spec_for(const LocaleTable& table, const std::string& language);

std::string format_number(const OMObject& number, const LocaleNumberSpec& spec);

class RenderError : public std::logic_error {
public:
    explicit RenderError(const std::string& what);
};

struct EngineOptions {
    LocaleTable locales = default_locale_table();
    SpecificityOrder specificity_order = default_specificity_order();
};

PresNode render(const OMPtr& expr, const NotationStore& store, const RenderContext& ctx,
                const EngineOptions& options = {});

// MathML: XML text with a `math` root carrying the default namespace once.
// latex/text: concatenation of the text leaves.
std::string serialize_pres(const PresNode& node, OutputFormat format);

std::size_t count_fallback_markers(const PresNode& node);

} // namespace notemill

#endif
