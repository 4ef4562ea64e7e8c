#pragma once

#include <stdexcept>
#include <string>

namespace pmdlab {

/// Malformed or inconsistent input: bad dimensions, invalid probabilities,
/// unparsable configuration.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to certify its own result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point lies outside the domain where the generator gradient exists.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class UnsupportedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pmdlab
