#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flakesift/dataset.hpp"
#include "flakesift/error.hpp"

namespace flakesift {

namespace xml {

struct Element {
    std::string name;
    std::map<std::string, std::string> attributes;
    std::vector<Element> children;
    std::string text;  // concatenated character data
};

// Minimal XML reader: elements, attributes, text, CDATA, comments, the five
// predefined entities and numeric references. Enough for JUnit/Surefire
// reports; every failure names the byte offset.
class Parser {
public:
    explicit Parser(std::string_view input) : in_(input) {}

    Element parse_document() {
        skip_prolog();
        Element root = parse_element();
        skip_whitespace_and_misc();
        if (pos_ != in_.size()) {
            fail("trailing content after document element");
        }
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw parse_error("malformed-xml",
                          "XML error at byte offset " + std::to_string(pos_) + ": " + what);
    }

    char peek() const { return pos_ < in_.size() ? in_[pos_] : '\0'; }
    bool eof() const { return pos_ >= in_.size(); }

    bool consume(std::string_view token) {
        if (in_.substr(pos_, token.size()) == token) {
            pos_ += token.size();
            return true;
        }
        return false;
    }

    void expect(std::string_view token, const char* what) {
        if (!consume(token)) fail(std::string("expected ") + what);
    }

    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
    static bool is_name_start(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':';
    }
    static bool is_name_char(char c) {
        return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
    }

    void skip_space() {
        while (!eof() && is_space(peek())) ++pos_;
    }

    void skip_comment_or_misc() {
        for (;;) {
            skip_space();
            if (consume("<!--")) {
                const auto end = in_.find("-->", pos_);
                if (end == std::string_view::npos) fail("unterminated comment");
                pos_ = end + 3;
            } else if (consume("<?")) {
                const auto end = in_.find("?>", pos_);
                if (end == std::string_view::npos) fail("unterminated processing instruction");
                pos_ = end + 2;
            } else if (consume("<!DOCTYPE")) {
                const auto end = in_.find('>', pos_);
                if (end == std::string_view::npos) fail("unterminated DOCTYPE");
                pos_ = end + 1;
            } else {
                return;
            }
        }
    }

    void skip_prolog() { skip_comment_or_misc(); }
    void skip_whitespace_and_misc() { skip_comment_or_misc(); }

    std::string parse_name() {
        if (eof() || !is_name_start(peek())) fail("expected name");
        const std::size_t start = pos_;
        while (!eof() && is_name_char(peek())) ++pos_;
        return std::string(in_.substr(start, pos_ - start));
    }

    std::string decode_entities(std::string_view raw) {
        std::string out;
        out.reserve(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] != '&') {
                out += raw[i];
                continue;
            }
            const auto semi = raw.find(';', i);
            if (semi == std::string_view::npos) fail("unterminated entity reference");
            const std::string_view ent = raw.substr(i + 1, semi - i - 1);
            if (ent == "lt") out += '<';
            else if (ent == "gt") out += '>';
            else if (ent == "amp") out += '&';
            else if (ent == "apos") out += '\'';
            else if (ent == "quot") out += '"';
            else if (!ent.empty() && ent[0] == '#') {
                unsigned long code = 0;
                try {
                    code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                               ? std::stoul(std::string(ent.substr(2)), nullptr, 16)
                               : std::stoul(std::string(ent.substr(1)), nullptr, 10);
                } catch (const std::exception&) {
                    fail("bad numeric character reference");
                }
                append_utf8(out, code);
            } else {
                fail("unknown entity &" + std::string(ent) + ";");
            }
            i = semi;
        }
        return out;
    }

    static void append_utf8(std::string& out, unsigned long cp) {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }

    std::string parse_attribute_value() {
        const char quote = peek();
        if (quote != '"' && quote != '\'') fail("expected quoted attribute value");
        ++pos_;
        const std::size_t start = pos_;
        while (!eof() && peek() != quote) {
            if (peek() == '<') fail("'<' in attribute value");
            ++pos_;
        }
        if (eof()) fail("unterminated attribute value");
        std::string value = decode_entities(in_.substr(start, pos_ - start));
        ++pos_;
        return value;
    }

    Element parse_element() {
        expect("<", "'<'");
        Element el;
        el.name = parse_name();
        for (;;) {
            skip_space();
            if (consume("/>")) return el;
            if (consume(">")) break;
            const std::string attr = parse_name();
            skip_space();
            expect("=", "'='");
            skip_space();
            if (!el.attributes.emplace(attr, parse_attribute_value()).second) {
                fail("duplicate attribute " + attr);
            }
        }
        parse_content(el);
        return el;
    }

    void parse_content(Element& el) {
        std::size_t text_start = pos_;
        for (;;) {
            if (eof()) fail("unterminated element <" + el.name + ">");
            if (peek() != '<') {
                ++pos_;
                continue;
            }
            el.text += decode_entities(in_.substr(text_start, pos_ - text_start));
            if (consume("<![CDATA[")) {
                const auto end = in_.find("]]>", pos_);
                if (end == std::string_view::npos) fail("unterminated CDATA section");
                el.text += std::string(in_.substr(pos_, end - pos_));
                pos_ = end + 3;
            } else if (consume("<!--")) {
                const auto end = in_.find("-->", pos_);
                if (end == std::string_view::npos) fail("unterminated comment");
                pos_ = end + 3;
            } else if (consume("<?")) {
                const auto end = in_.find("?>", pos_);
                if (end == std::string_view::npos) fail("unterminated processing instruction");
                pos_ = end + 2;
            } else if (in_.substr(pos_, 2) == "</") {
                pos_ += 2;
                const std::string closing = parse_name();
                if (closing != el.name) {
                    fail("mismatched closing tag </" + closing + "> for <" + el.name + ">");
                }
                skip_space();
                expect(">", "'>'");
                return;
            } else {
                el.children.push_back(parse_element());
            }
            text_start = pos_;
        }
    }

    std::string_view in_;
    std::size_t pos_ = 0;
};

}  // namespace xml

namespace detail {

inline void collect_testcases(const xml::Element& el, std::vector<const xml::Element*>& out) {
    if (el.name == "testcase") {
        out.push_back(&el);
        return;
    }
    for (const auto& child : el.children) collect_testcases(child, out);
}

}  // namespace detail

// One JUnit/Surefire report = the outcomes of a single run. <failure>/<error>
// children mark Fail (text content -> stack trace, message attr -> error
// message); <skipped> marks NotExecuted; anything else is Pass.
inline ProjectDataset parse_junit_xml(std::string_view report_bytes, RunId run) {
    xml::Parser parser(report_bytes);
    const xml::Element root = parser.parse_document();
    if (root.name != "testsuite" && root.name != "testsuites") {
        throw parse_error("not-a-junit-report", "document element <" + root.name + "> is not a test suite");
    }

    std::vector<const xml::Element*> cases;
    detail::collect_testcases(root, cases);

    ProjectDataset ds;
    ds.add_run(run);
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto* testcase : cases) {
        const auto cls = testcase->attributes.find("classname");
        const auto name = testcase->attributes.find("name");
        if (cls == testcase->attributes.end() || name == testcase->attributes.end()) {
            throw parse_error("missing-attribute", "<testcase> without classname/name attributes");
        }
        if (!seen.emplace(cls->second, name->second).second) {
            throw parse_error("duplicate-testcase",
                              "duplicate testcase " + cls->second + "#" + name->second + " in one report");
        }
        const TestId test = TestId::parse(cls->second + "#" + name->second);

        const xml::Element* failure = nullptr;
        bool skipped = false;
        for (const auto& child : testcase->children) {
            if (child.name == "failure" || child.name == "error") failure = &child;
            if (child.name == "skipped") skipped = true;
        }
        if (failure != nullptr) {
            ds.set_outcome(run, test, Outcome::Fail);
            FailureRecord record;
            record.run = run;
            record.test = test;
            record.stack_trace = failure->text;
            const auto msg = failure->attributes.find("message");
            record.error_message = msg == failure->attributes.end() ? std::string() : msg->second;
            ds.add_failure(std::move(record));
        } else if (skipped) {
            ds.set_outcome(run, test, Outcome::NotExecuted);
        } else {
            ds.set_outcome(run, test, Outcome::Pass);
        }
    }
    ds.normalize_failures();
    return ds;
}

}  // namespace flakesift
