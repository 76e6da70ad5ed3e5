#ifndef NOTEMILL_CONTEXT_HPP
#define NOTEMILL_CONTEXT_HPP

#include <array>
#include <optional>
#include <set>
#include <string>

namespace notemill {

enum class OutputFormat { mathml, latex, text };

std::string to_string(OutputFormat f);
std::optional<OutputFormat> format_from_string(const std::string& s);

bool is_language_tag(const std::string& s);   // [a-z]{2,8}

constexpr int kMinLevel = 1;
constexpr int kMaxLevel = 4;

struct RenderContext {
    std::string language;
    OutputFormat format = OutputFormat::mathml;
    int level = 1;
    std::string collection;   // empty = none
};

// Throws std::invalid_argument on a bad language tag or level.
RenderContext make_context(const std::string& language, OutputFormat format,
                           int level, const std::string& collection = "");

struct LevelRange {
    int lo = kMinLevel;
    int hi = kMaxLevel;
    bool contains(int level) const { return lo <= level && level <= hi; }
    bool full() const { return lo == kMinLevel && hi == kMaxLevel; }
    bool operator==(const LevelRange&) const = default;
};

// Empty set / absent range means the dimension is unconstrained.
struct ContextConstraint {
    std::set<std::string> languages;
    std::set<OutputFormat> formats;
    std::optional<LevelRange> levels;
    std::set<std::string> collections;

    bool unconstrained() const;
    bool operator==(const ContextConstraint&) const = default;
};

bool eligible(const ContextConstraint& c, const RenderContext& ctx);

enum class Dimension { collection = 0, level = 1, language = 2, format = 3 };

using SpecificityOrder = std::array<Dimension, 4>;

constexpr SpecificityOrder default_specificity_order() {
    return {Dimension::collection, Dimension::level, Dimension::language, Dimension::format};
}

// 0/1 per dimension: 1 iff the constraint specified the dimension (and the
// context satisfied it). Compared lexicographically in a dimension order.
struct Specificity {
    std::array<int, 4> bits{0, 0, 0, 0};

    int& operator[](Dimension d) { return bits[static_cast<int>(d)]; }
    int operator[](Dimension d) const { return bits[static_cast<int>(d)]; }
    bool operator==(const Specificity&) const = default;
};

// true iff a < b under the given priority order.
bool specificity_less(const Specificity& a, const Specificity& b,
                      const SpecificityOrder& order = default_specificity_order());

// Precondition: eligible(c, ctx); throws std::logic_error otherwise.
Specificity specificity(const ContextConstraint& c, const RenderContext& ctx);

} // namespace notemill

#endif
