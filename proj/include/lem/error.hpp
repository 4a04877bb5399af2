#pragma once

#include <stdexcept>
#include <string>

namespace lem {

// Base for every error raised by the library. Subclasses let callers (and the
// CLI exit-code mapping) tell configuration mistakes from protocol aborts.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FieldError : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

class ShareError : public Error {
 public:
  using Error::Error;
};

// Raised when a value is opened without a matching allowlist entry.
class PolicyViolation : public Error {
 public:
  using Error::Error;
};

class PoolExhausted : public Error {
 public:
  using Error::Error;
};

// Any failure that stops the three evaluators: timeouts, malformed peer
// traffic, a peer that aborted.
class ProtocolAbort : public Error {
 public:
  using Error::Error;
};

// A peer announced that it stopped; the root cause is on the peer's side.
class PeerAbort : public ProtocolAbort {
 public:
  using ProtocolAbort::ProtocolAbort;
};

class BillingError : public Error {
 public:
  using Error::Error;
};

}  // namespace lem
