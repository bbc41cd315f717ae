#pragma once

#include <stdexcept>
#include <string>

namespace fincon {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidGraph : public Error {
public:
  using Error::Error;
};

class NotStronglyConnected : public Error {
public:
  using Error::Error;
};

class NotSymmetric : public Error {
public:
  using Error::Error;
};

class InvalidProtocol : public Error {
public:
  using Error::Error;
};

class WrongProtocolKind : public Error {
public:
  using Error::Error;
};

/// An (A2) ratio could not be formed, e.g. a nonpositive antiderivative.
class DomainError : public Error {
public:
  using Error::Error;
};

class NonFiniteState : public Error {
public:
  using Error::Error;
};

class InvalidConstants : public Error {
public:
  using Error::Error;
};

class ZeroCoupling : public Error {
public:
  using Error::Error;
};

class DegenerateInput : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

/// Reading or writing a file failed.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace fincon
