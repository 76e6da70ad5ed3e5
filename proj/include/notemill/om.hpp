#ifndef NOTEMILL_OM_HPP
#define NOTEMILL_OM_HPP

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace notemill {

enum class OMKind { integer, decimal, variable, symbol, string, apply, bind };

class OMObject;
using OMPtr = std::shared_ptr<const OMObject>;

// Immutable expression tree. Integers are kept as a sign plus a normalized
// digit string (no leading zeros, no negative zero); decimals keep their
// digit strings exactly as written so locale formatting stays digit-exact.
class OMObject {
public:
    OMKind kind;

    // integer / decimal
    bool negative = false;
    std::string int_digits;
    std::string frac_digits;   // decimal only, may be empty

    // variable name / symbol name
    std::string name;
    std::string cd;            // symbol only

    // string
    std::string str;

    // apply: head + args; bind: head = binder, args = bound variables
    OMPtr head;
    std::vector<OMPtr> args;
    OMPtr body;                // bind only

    const OMPtr& binder() const { return head; }
    const std::vector<OMPtr>& bound_vars() const { return args; }
};

bool om_equal(const OMObject& a, const OMObject& b);
inline bool om_equal(const OMPtr& a, const OMPtr& b) { return om_equal(*a, *b); }

// Factories validate their inputs and throw std::invalid_argument on
// violations (bad digit strings, bad identifiers, empty bound-var lists).
OMPtr make_integer(long long value);
OMPtr make_integer(bool negative, const std::string& digits);
OMPtr make_decimal(bool negative, const std::string& int_digits, const std::string& frac_digits);
OMPtr make_variable(const std::string& name);
OMPtr make_symbol(const std::string& cd, const std::string& name);
OMPtr make_string(const std::string& value);
OMPtr make_apply(OMPtr head, std::vector<OMPtr> args);
OMPtr make_bind(OMPtr binder, std::vector<OMPtr> vars, OMPtr body);

bool is_identifier(const std::string& s);

class ParseError : public std::runtime_error {
public:
    ParseError(int line, int col, const std::string& reason);
    int line;
    int col;
    std::string reason;
};

// OpenMath XML subset: OMOBJ root holding one of OMI, OMF (dec only), OMV,
// OMS, OMSTR, OMA, OMBIND.
OMPtr parse_om(const std::string& xml_text);
std::string serialize_om(const OMPtr& obj);

// One object element (no OMOBJ wrapper), for embedding OpenMath fragments
// in other documents. Throws ParseError.
struct XmlNode;
OMPtr om_from_xml(const XmlNode& element);

// Compact syntax: cd/name, cd/name(e1,...,en), bare digits, #d.d, $x,
// "...", bind(cd/name, [$x,...], body).
OMPtr parse_compact(const std::string& input);

} // namespace notemill

#endif
