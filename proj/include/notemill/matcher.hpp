#ifndef NOTEMILL_MATCHER_HPP
#define NOTEMILL_MATCHER_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "notemill/notation.hpp"
#include "notemill/om.hpp"

namespace notemill {

struct BoundValue {
    bool is_sequence = false;
    OMPtr single;                // single slots
    std::vector<OMPtr> items;    // sequence slots, possibly empty
};

struct Bindings {
    std::map<std::string, BoundValue> by_name;

    const BoundValue* find(const std::string& name) const;
};

// Pure structural match; binds every slot of the prototype or fails.
std::optional<Bindings> match_prototype(const Prototype& proto, const OMPtr& expr);

// Instrumentation used to prove the deliver path never matches.
std::uint64_t matcher_invocations();
void reset_matcher_invocations();

} // namespace notemill

#endif
