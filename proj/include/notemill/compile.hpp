#ifndef NOTEMILL_COMPILE_HPP
#define NOTEMILL_COMPILE_HPP

#include <cstddef>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "notemill/render.hpp"

namespace notemill {

struct CompiledNode;
using CompiledPtr = std::shared_ptr<const CompiledNode>;

// Static-context-specialized render plan. Element/text nodes are resolved
// output; branch nodes defer to the dynamic dimensions, first satisfied
// guard wins, the default arm guarantees totality.
struct CompiledNode {
    enum class Kind { element, text, branch };

    Kind kind = Kind::text;

    // element / text, mirroring PresNode
    std::string tag;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<CompiledPtr> children;
    std::string text;
    bool fallback_marker = false;

    // branch
    struct Arm {
        std::optional<LevelRange> levels;        // absent = unconstrained
        std::set<std::string> collections;       // empty = unconstrained
        CompiledPtr node;
    };
    std::vector<Arm> arms;
    CompiledPtr default_arm;
};

struct CompiledTemplate {
    std::string language;
    OutputFormat format = OutputFormat::mathml;
    CompiledPtr root;
};

CompiledTemplate compile(const OMPtr& expr, const NotationStore& store,
                         const std::string& language, OutputFormat format,
                         const EngineOptions& options = {});

// Matching-free: resolves branches against (level, collection) only.
PresNode deliver(const CompiledTemplate& t, int level, const std::string& collection = "");

std::size_t count_branches(const CompiledTemplate& t);

// Versioned JSON artifact, round-trip safe.
std::string serialize_template(const CompiledTemplate& t);
CompiledTemplate parse_template(const std::string& text);   // throws std::invalid_argument

struct CompileKey {
    std::string expr_xml;   // canonical serialization = expression identity
    std::string language;
    OutputFormat format = OutputFormat::mathml;

    std::uint64_t content_hash() const;   // FNV-1a over the fields
    bool operator==(const CompileKey&) const = default;
};

CompileKey make_compile_key(const OMPtr& expr, const std::string& language, OutputFormat format);

// Bounded LRU keyed by content hash with full key comparison on hit.
// Thread-safe; a compile racing an insert keeps the first stored result.
class CompileCache {
public:
    explicit CompileCache(std::size_t capacity = 10000);

    std::shared_ptr<const CompiledTemplate> get_or_compile(const OMPtr& expr,
                                                           const NotationStore& store,
                                                           const std::string& language,
                                                           OutputFormat format,
                                                           const EngineOptions& options = {});

    std::size_t size() const;
    std::uint64_t hits() const;
    std::uint64_t misses() const;

private:
    struct Entry {
        CompileKey key;
        std::shared_ptr<const CompiledTemplate> value;
    };

    std::shared_ptr<const CompiledTemplate> lookup(const CompileKey& key);
    void insert_if_absent(const CompileKey& key, std::shared_ptr<const CompiledTemplate>& value);

    mutable std::mutex mutex_;
    std::size_t capacity_;
    std::list<Entry> entries_;   // front = most recent
    std::unordered_map<std::uint64_t, std::vector<std::list<Entry>::iterator>> index_;
    std::uint64_t hits_ = 0;
    std::uint64_t misses_ = 0;
};

} // namespace notemill

#endif
