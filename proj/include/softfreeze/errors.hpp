#pragma once

#include <stdexcept>
#include <string>

namespace softfreeze {

// Malformed caller input: bad parameter ranges, unreadable or ill-formed files.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape or parameter mismatch detected while wiring components together.
class ConfigError : public InputError {
public:
    using InputError::InputError;
};

// A residency contract was broken, e.g. freezing a frozen or protected token.
class PolicyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Internal bookkeeping no longer holds; always a bug.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace softfreeze
