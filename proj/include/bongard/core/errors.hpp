#pragma once

#include <stdexcept>
#include <string>

namespace bongard::core {

// Base for all harness errors. Subtypes are what callers catch; the what()
// string carries the offending id/path/token where one exists.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// bp-core
struct SchemaError : Error {
  using Error::Error;
};
struct IntegrityError : Error {
  using Error::Error;
};
struct MissingImageError : Error {
  using Error::Error;
};
struct DecodeError : Error {
  using Error::Error;
};
struct MissingTestImagesError : Error {
  using Error::Error;
};

// model-gateway
struct TransportError : Error {
  using Error::Error;
};
// Retryable by contract; the gateway backs off and retries these.
struct RateLimitedError : TransportError {
  using TransportError::TransportError;
};
struct ProviderError : Error {
  using Error::Error;
};
struct ScriptExhaustedError : Error {
  using Error::Error;
};
struct MatcherMismatchError : Error {
  using Error::Error;
};

// parsing / evaluation
struct ParseError : Error {
  using Error::Error;
};
struct EmptyAnswerError : Error {
  using Error::Error;
};
struct TooFewProblemsError : Error {
  using Error::Error;
};
struct MisalignedIdsError : Error {
  using Error::Error;
};
struct MissingCategoryError : Error {
  using Error::Error;
};

// harness
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace bongard::core
