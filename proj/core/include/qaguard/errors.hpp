#pragma once

#include <stdexcept>
#include <string>

namespace qaguard {

/// Base of every error raised by the library. Callers that only care about
/// "something went wrong" can catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (JSONL line, CSV row, gazetteer).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Input is well formed but violates a contract (duplicate id, empty corpus, bad level).
class ValidationError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Unusable run configuration, e.g. a gazetteer type with no eligible substitute.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Augmentation provider failure (network, HTTP status, unparseable output).
class ProviderError : public Error {
public:
    using Error::Error;
};

class CacheMissError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class EmptyGenerationError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class ReaderError : public Error {
public:
    using Error::Error;
};

/// Aggregation found (level, strategy, context source) cells with no records.
class IncompleteGridError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace qaguard
