// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace motionloss {

/// A precondition on the shape or content of the inputs was not met.
class ContractViolation : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// A numeric argument lies outside the domain of the operation (e.g. non-positive depth).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// A requested entity (object id, instance) does not exist.
class LookupError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

/// Malformed configuration document. Carries the offending line (1-based, 0 if unknown) and field.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(const std::string &message, int line = 0, std::string field = {})
        : std::runtime_error(format(message, line, field)), line_(line), field_(std::move(field)) {}

    int line() const { return line_; }
    const std::string &field() const { return field_; }

  private:
    static std::string format(const std::string &message, int line, const std::string &field) {
        std::string out;
        if (line > 0) out += "line " + std::to_string(line) + ": ";
        if (!field.empty()) out += "field '" + field + "': ";
        return out + message;
    }

    int line_;
    std::string field_;
};

inline void require(bool condition, const char *message) {
    if (!condition) throw ContractViolation(message);
}

} // namespace motionloss
