#pragma once

#include <stdexcept>
#include <string>

namespace conefield {

/// Malformed input file; message carries the offending line number.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inputs are well-formed but inconsistent with each other (wrong graph,
/// mismatched parameters, out-of-range request).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A query landed on a configuration never seen in training. Distinct from
/// DataError so callers can fall back instead of aborting.
class NoDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace conefield
