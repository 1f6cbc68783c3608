#pragma once

#include <stdexcept>
#include <string>

namespace pimhtap {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or unsupported schema / workload description.
class SchemaError : public Error {
public:
    using Error::Error;
};

// A name or index that does not resolve.
class LookupError : public Error {
public:
    using Error::Error;
};

// Input that parses but violates a documented constraint.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Layout generation cannot satisfy its constraints.
class LayoutError : public Error {
public:
    using Error::Error;
};

// Bus / bank ownership protocol was violated.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// A caller broke a precondition (e.g. snapshot timestamps going backwards).
class ContractViolation : public Error {
public:
    using Error::Error;
};

}  // namespace pimhtap
