#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace urbdiff {

// Base of every failure the library raises on purpose. Catching this at the
// CLI boundary separates "our" errors (exit 1 with a message) from bugs.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File- and format-level failures.
class ParseError : public Error {
public:
    using Error::Error;
};
class UnsupportedFormat : public Error {
public:
    using Error::Error;
};
class TruncatedFile : public Error {
public:
    using Error::Error;
};

// Geometry / layout failures.
class AlignmentError : public Error {
public:
    using Error::Error;
};
class OutOfBounds : public Error {
public:
    using Error::Error;
};
class ShapeError : public Error {
public:
    using Error::Error;
};
class ConfigError : public Error {
public:
    using Error::Error;
};

// Data-content failures.
class LabelError : public Error {
public:
    using Error::Error;
};
class NumericFault : public Error {
public:
    using Error::Error;
};
class ManifestError : public Error {
public:
    using Error::Error;
};
class BalanceError : public Error {
public:
    using Error::Error;
};
class DegenerateSplit : public Error {
public:
    using Error::Error;
};
class SampleError : public Error {
public:
    using Error::Error;
};
class IncompatibleCheckpoint : public Error {
public:
    using Error::Error;
};

// Non-fatal conditions (e.g. a constant band under z-score) are appended here
// instead of thrown.
using Warnings = std::vector<std::string>;

}  // namespace urbdiff
