#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace squarebox {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ValueError : public Error {
 public:
  using Error::Error;
};

// File and manifest problems.
class FileNotFoundError : public Error {
 public:
  using Error::Error;
};

class ManifestError : public Error {
 public:
  using Error::Error;
};

class WeightCountError : public Error {
 public:
  using Error::Error;
};

class UnknownLayerError : public Error {
 public:
  using Error::Error;
};

class TruncatedBlobError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

// Remote classifier transport. NetworkError and HttpStatusError are both
// transport failures; a response that arrived but cannot be used is a
// DecodeError or LengthMismatchError.
class TransportError : public Error {
 public:
  using Error::Error;
};

class NetworkError : public TransportError {
 public:
  using TransportError::TransportError;
};

class HttpStatusError : public TransportError {
 public:
  HttpStatusError(int status, const std::string& what)
      : TransportError(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class LengthMismatchError : public Error {
 public:
  using Error::Error;
};

// Raised by run_attack when the classifier fails mid-run.
class AttackAborted : public Error {
 public:
  AttackAborted(std::size_t queries_used, const std::string& what)
      : Error(what), queries_used_(queries_used) {}
  std::size_t queries_used() const { return queries_used_; }

 private:
  std::size_t queries_used_;
};

}  // namespace squarebox
