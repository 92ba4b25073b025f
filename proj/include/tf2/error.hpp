#pragma once

#include <stdexcept>
#include <string>

namespace tf2 {

/// Root of every error the toolkit throws. The CLI maps subclasses onto
/// exit codes: transport failures exit 2, everything else exits 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition or invariant on caller-supplied data does not hold.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A file could not be opened, read, or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// The remote endpoint could not be reached or kept failing after retries.
/// `status` is the last HTTP status seen, or 0 when no response arrived.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int status)
        : Error(what), status_(status) {}

    int status() const noexcept { return status_; }

private:
    int status_;
};

/// The endpoint answered but the completion was empty or whitespace-only.
class EmptyOutputError : public Error {
public:
    using Error::Error;
};

/// Judge output could not be turned into rubric scores.
class JudgeParseError : public Error {
public:
    JudgeParseError(const std::string& what, std::string raw)
        : Error(what), raw_(std::move(raw)) {}

    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

/// No JSON object could be located in the judge output.
class NoJsonObjectError : public JudgeParseError {
public:
    using JudgeParseError::JudgeParseError;
};

/// A required rubric key is missing.
class SchemaError : public JudgeParseError {
public:
    SchemaError(const std::string& key, std::string raw)
        : JudgeParseError("missing rubric key \"" + key + "\"", std::move(raw)), key_(key) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// A rubric score is not an integer in 1..5.
class RangeError : public JudgeParseError {
public:
    RangeError(const std::string& key, const std::string& detail, std::string raw)
        : JudgeParseError("score for \"" + key + "\" " + detail, std::move(raw)), key_(key) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace tf2
