#pragma once

#include <stdexcept>
#include <string>

namespace rmgls {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A factored result would have rank 0.
class RankCollapseError : public Error {
 public:
  using Error::Error;
};

class DenseCapError : public Error {
 public:
  using Error::Error;
};

// (Sigma + t M) is numerically singular.
class RetractionDomainError : public Error {
 public:
  using Error::Error;
};

class BaseMismatchError : public Error {
 public:
  using Error::Error;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class BracketNotFoundError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rmgls
