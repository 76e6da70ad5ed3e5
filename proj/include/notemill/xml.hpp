#ifndef NOTEMILL_XML_HPP
#define NOTEMILL_XML_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace notemill {

// Minimal XML document model shared by the OpenMath codec, the notation
// loader and the draft emitter. Comments and processing instructions are
// skipped on parse; comment nodes exist only so writers can emit them.
struct XmlNode {
    enum class Kind { element, text, comment };

    Kind kind = Kind::element;
    std::string tag;                                          // element
    std::vector<std::pair<std::string, std::string>> attrs;   // element, authored order
    std::vector<XmlNode> children;                            // element
    std::string text;                                         // text / comment
    int line = 0;
    int col = 0;

    static XmlNode elem(std::string tag);
    static XmlNode text_node(std::string text);
    static XmlNode comment(std::string text);

    const std::string* attr(const std::string& name) const;
    bool is_ws_text() const;
};

class XmlError : public std::runtime_error {
public:
    XmlError(int line, int col, const std::string& reason);
    int line;
    int col;
    std::string reason;
};

// Parses a single-rooted document. DOCTYPE is rejected; the XML declaration,
// comments and PIs are skipped; CDATA and the five named entities plus
// numeric character references are supported.
XmlNode parse_xml(const std::string& input);

// Compact serialization: no inserted whitespace, attributes in stored order.
std::string serialize_xml(const XmlNode& root);

std::string xml_escape_text(const std::string& s);
std::string xml_escape_attr(const std::string& s);

} // namespace notemill

#endif
