#pragma once

#include <stdexcept>
#include <string>

namespace radlabel {

/// Bad input data: malformed records, duplicate ids, off-vocabulary gold labels.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A prompt template references a placeholder that the caller did not supply.
class PlaceholderError : public std::invalid_argument {
 public:
  explicit PlaceholderError(std::string key)
      : std::invalid_argument("missing prompt placeholder: {" + key + "}"),
        key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Chat endpoint failed permanently (after retries). `status` is the last HTTP
/// status seen, or 0 when the connection itself failed.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, int status)
      : std::runtime_error(what), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

class TimeoutError : public TransportError {
 public:
  explicit TimeoutError(const std::string& what) : TransportError(what, 0) {}
};

/// The endpoint's reply did not satisfy the requested output schema, even
/// after the repair retry. The offending payload is kept for auditing.
class StructuredOutputError : public std::runtime_error {
 public:
  StructuredOutputError(const std::string& what, std::string raw)
      : std::runtime_error(what), raw_(std::move(raw)) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

}  // namespace radlabel
