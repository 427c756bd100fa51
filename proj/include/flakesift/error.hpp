#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flakesift {

// Error classes map 1:1 onto CLI exit codes; `reason` is the stable
// machine-readable code printed on failure (kebab-case).
enum class ErrorClass {
    Parse = 3,
    Validation = 4,
    Gate = 5,
    Io = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, std::string reason, const std::string& message)
        : std::runtime_error(message), class_(cls), reason_(std::move(reason)) {}

    ErrorClass error_class() const noexcept { return class_; }
    const std::string& reason() const noexcept { return reason_; }
    int exit_code() const noexcept { return static_cast<int>(class_); }

private:
    ErrorClass class_;
    std::string reason_;
};

inline Error parse_error(std::string_view reason, const std::string& message) {
    return Error(ErrorClass::Parse, std::string(reason), message);
}

inline Error validation_error(std::string_view reason, const std::string& message) {
    return Error(ErrorClass::Validation, std::string(reason), message);
}

// Gate errors signal "input legitimately does not admit this analysis"
// (too few tests, no cluster, silhouette floor) rather than bad input.
inline Error gate_error(std::string_view reason, const std::string& message) {
    return Error(ErrorClass::Gate, std::string(reason), message);
}

inline Error io_error(std::string_view reason, const std::string& message) {
    return Error(ErrorClass::Io, std::string(reason), message);
}

}  // namespace flakesift
