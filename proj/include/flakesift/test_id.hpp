#pragma once

#include <cctype>
#include <compare>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flakesift/error.hpp"

namespace flakesift {

// Fully qualified test case identity: `pkg.one.ClassName#methodName`.
// The rendered form is the canonical ordering key for every downstream index.
class TestId {
public:
    TestId() = default;

    TestId(std::vector<std::string> package_path, std::string class_name, std::string method_name)
        : package_path_(std::move(package_path)),
          class_name_(std::move(class_name)),
          method_name_(std::move(method_name)) {
        if (class_name_.empty() || method_name_.empty()) {
            throw validation_error("bad-test-id", "class and method names must be non-empty");
        }
        rendered_ = render();
    }

    static TestId parse(std::string_view text) {
        const auto hash = text.find('#');
        if (hash == std::string_view::npos || hash + 1 == text.size()) {
            throw validation_error("bad-test-id", "expected `pkg.Class#method`, got: " + std::string(text));
        }
        const std::string_view qualified = text.substr(0, hash);
        const std::string_view method = text.substr(hash + 1);
        std::vector<std::string> components;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= qualified.size(); ++i) {
            if (i == qualified.size() || qualified[i] == '.') {
                components.emplace_back(qualified.substr(start, i - start));
                start = i + 1;
            }
        }
        if (components.empty() || components.back().empty()) {
            throw validation_error("bad-test-id", "empty class name in: " + std::string(text));
        }
        std::string cls = components.back();
        components.pop_back();
        for (const auto& c : components) {
            if (c.empty()) {
                throw validation_error("bad-test-id", "empty package component in: " + std::string(text));
            }
        }
        return TestId(std::move(components), std::move(cls), std::string(method));
    }

    const std::vector<std::string>& package_path() const noexcept { return package_path_; }
    const std::string& class_name() const noexcept { return class_name_; }
    const std::string& method_name() const noexcept { return method_name_; }
    const std::string& name() const noexcept { return rendered_; }

    // Package components + class name; the path of the hierarchy distance.
    std::vector<std::string> hierarchy_path() const {
        std::vector<std::string> path = package_path_;
        path.push_back(class_name_);
        return path;
    }

    // `pkg.one.ClassName` — groups tests by class for cluster reports.
    std::string qualified_class() const {
        std::string out;
        for (const auto& c : package_path_) {
            out += c;
            out += '.';
        }
        out += class_name_;
        return out;
    }

    friend bool operator==(const TestId& a, const TestId& b) { return a.rendered_ == b.rendered_; }
    friend std::strong_ordering operator<=>(const TestId& a, const TestId& b) {
        return a.rendered_ <=> b.rendered_;
    }

private:
    std::string render() const {
        std::string out;
        for (const auto& c : package_path_) {
            out += c;
            out += '.';
        }
        out += class_name_;
        out += '#';
        out += method_name_;
        return out;
    }

    std::vector<std::string> package_path_;
    std::string class_name_;
    std::string method_name_;
    std::string rendered_;
};

namespace detail {

// Camel-case split: boundary at lower|digit -> upper, and inside an acronym
// run before an upper followed by a lower ("HTTPServer" -> HTTP, Server).
inline void split_camel(std::string_view word, std::set<std::string>& out) {
    auto is_up = [](char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; };
    auto is_lo = [](char c) { return std::islower(static_cast<unsigned char>(c)) != 0; };
    std::string current;
    for (std::size_t i = 0; i < word.size(); ++i) {
        const bool boundary =
            i > 0 && is_up(word[i]) &&
            (!is_up(word[i - 1]) || (i + 1 < word.size() && is_lo(word[i + 1])));
        if (boundary && !current.empty()) {
            out.insert(current);
            current.clear();
        }
        current += static_cast<char>(std::tolower(static_cast<unsigned char>(word[i])));
    }
    if (!current.empty()) out.insert(current);
}

}  // namespace detail

// Token set of a test name: split on `.` and `#`, then on capitalization,
// lowercased and deduplicated.
inline std::set<std::string> tokenize_name(const TestId& id) {
    std::set<std::string> tokens;
    for (const auto& c : id.package_path()) detail::split_camel(c, tokens);
    detail::split_camel(id.class_name(), tokens);
    detail::split_camel(id.method_name(), tokens);
    return tokens;
}

}  // namespace flakesift
