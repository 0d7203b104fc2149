#pragma once

#include <stdexcept>
#include <string>

namespace polalign {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (JSON, JSONL, CSV).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Input parsed but violates a documented invariant. Carries the offending
/// docket id and field when one applies.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message, std::string docket_id = {}, std::string field = {})
        : Error(compose(message, docket_id, field)), docket_id_(std::move(docket_id)), field_(std::move(field)) {}

    const std::string& docket_id() const noexcept { return docket_id_; }
    const std::string& field() const noexcept { return field_; }

private:
    static std::string compose(const std::string& message, const std::string& docket, const std::string& field) {
        std::string out = message;
        if (!docket.empty()) out += " [docket " + docket + "]";
        if (!field.empty()) out += " [field " + field + "]";
        return out;
    }

    std::string docket_id_;
    std::string field_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Statistic undefined for the given input (constant vector, zero denominator).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// Too few pairwise-complete observations.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Network-level failure: connection refused, timeout, or retryable status
/// after the attempt budget was spent.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& message, int last_status = 0, int attempts = 1)
        : Error(message), last_status_(last_status), attempts_(attempts) {}

    int last_status() const noexcept { return last_status_; }
    int attempts() const noexcept { return attempts_; }

private:
    int last_status_;
    int attempts_;
};

class RetriesExhaustedError : public TransportError {
public:
    using TransportError::TransportError;
};

/// 401/403 from an endpoint. Never retried.
class AuthenticationError : public TransportError {
public:
    using TransportError::TransportError;
};

/// 4xx other than 401/403/429. Never retried.
class ClientRequestError : public TransportError {
public:
    using TransportError::TransportError;
};

/// Endpoint answered 2xx with a body that does not follow the wire schema.
class MalformedResponseError : public TransportError {
public:
    using TransportError::TransportError;
};

}  // namespace polalign
