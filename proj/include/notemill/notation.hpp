#ifndef NOTEMILL_NOTATION_HPP
#define NOTEMILL_NOTATION_HPP

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "notemill/context.hpp"
#include "notemill/om.hpp"

namespace notemill {

struct SymbolRef {
    std::string cd;
    std::string name;
    auto operator<=>(const SymbolRef&) const = default;
};

enum class SlotKind { single, sequence };

struct PatNode;
using PatPtr = std::shared_ptr<const PatNode>;

// Prototype pattern tree: OMObject shapes with slot leaves. Literal leaves
// hold the OMObject they must equal.
struct PatNode {
    enum class Kind { exact, apply, bind, slot };

    Kind kind = Kind::exact;
    OMPtr exact;                 // exact leaf
    PatPtr head;                 // apply head / bind binder
    std::vector<PatPtr> args;    // apply args / bind bound-var patterns
    PatPtr body;                 // bind
    std::string slot_name;
    SlotKind slot_kind = SlotKind::single;
};

struct Prototype {
    PatPtr root;
    SymbolRef head;                          // concrete head symbol
    std::map<std::string, SlotKind> slots;   // name -> kind
};

// Presentation template. For mathml the tree holds elements and text; for
// latex/text it is text chunks with slot markers. Separator templates carry
// no slots.
struct TemplateNode {
    enum class Kind { element, text, slot };

    Kind kind = Kind::text;
    std::string tag;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<TemplateNode> children;
    std::string text;
    std::string slot_name;
    int argprec = 0;
    std::vector<TemplateNode> separator;
};

struct Rendering {
    ContextConstraint constraint;
    int precedence = 0;
    std::vector<TemplateNode> body;
};

struct Notation {
    std::string id;
    Prototype prototype;
    std::vector<Rendering> renderings;
    std::optional<std::string> source_observation;
    bool draft = false;
};

class NotationFormatError : public std::runtime_error {
public:
    NotationFormatError(std::string file, int line, int col, const std::string& reason);
    std::string file;
    int line;
    int col;
    std::string reason;
};

class DuplicateIdError : public std::runtime_error {
public:
    DuplicateIdError(std::string id, std::string file1, std::string file2);
    std::string id;
    std::string file1;
    std::string file2;
};

struct NotationFile {
    std::string name;      // used for lexicographic ordering and diagnostics
    std::string content;   // XML document
};

struct LoadOptions {
    bool allow_drafts = false;
};

class NotationStore {
public:
    const std::vector<Notation>& notations() const { return notations_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    // Candidate notations for a head symbol, in declaration order.
    std::vector<const Notation*> candidates_for(const SymbolRef& head) const;

    friend NotationStore load_notations(std::vector<NotationFile> files, const LoadOptions& options);

private:
    std::vector<Notation> notations_;
    std::map<SymbolRef, std::vector<std::size_t>> by_head_;
    std::vector<std::string> warnings_;
};

NotationStore load_notations(std::vector<NotationFile> files, const LoadOptions& options = {});

// Convenience: loads every *.xml file in a directory, sorted by file name.
NotationStore load_notations_dir(const std::string& dir, const LoadOptions& options = {});

// Head symbol of an expression: the root symbol, or the head of a root
// apply, or the binder of a root bind, when that position is a symbol.
std::optional<SymbolRef> head_symbol(const OMObject& expr);

struct Bindings;

struct SelectResult {
    const Notation* notation = nullptr;
    const Rendering* rendering = nullptr;
    std::shared_ptr<const Bindings> bindings;
};

// First declared candidate with maximal specificity whose prototype matches
// and whose constraint is eligible. nullopt = NoMatch.
std::optional<SelectResult> select(const NotationStore& store, const OMPtr& expr,
                                   const RenderContext& ctx,
                                   const SpecificityOrder& order = default_specificity_order());

} // namespace notemill

#endif
