#pragma once

#include <stdexcept>
#include <string>

namespace wsan {

/// Base of every error the library raises.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
  public:
    using Error::Error;
};

class InvalidModel : public Error {
  public:
    using Error::Error;
};

class RiccatiDivergence : public Error {
  public:
    using Error::Error;
};

class NotStabilizable : public Error {
  public:
    using Error::Error;
};

class NotDetectable : public Error {
  public:
    using Error::Error;
};

class OutOfRange : public Error {
  public:
    using Error::Error;
};

class TooLarge : public Error {
  public:
    using Error::Error;
};

class BudgetExceeded : public Error {
  public:
    using Error::Error;
};

class NotConverged : public Error {
  public:
    using Error::Error;
};

class SingularSystem : public Error {
  public:
    using Error::Error;
};

/// Raised when the actuator finds no input in the final packet. Unreachable for a
/// correct protocol implementation.
class ProtocolViolation : public Error {
  public:
    using Error::Error;
};

class ConfigInvalid : public Error {
  public:
    using Error::Error;
};

namespace detail {
inline void require_dims(bool ok, const std::string& what) {
    if (!ok) throw DimensionMismatch(what);
}
}  // namespace detail

}  // namespace wsan
