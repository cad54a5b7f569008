#pragma once

#include <stdexcept>
#include <string>

namespace nlemu {

// Configuration and input errors. Emulation failures are never thrown; they
// are recorded as a chain's TerminationReason.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LayoutError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class KeyError : public Error {
 public:
  using Error::Error;
};

class SpecError : public Error {
 public:
  using Error::Error;
};

class ParamError : public Error {
 public:
  using Error::Error;
};

class UnsupportedRegister : public Error {
 public:
  using Error::Error;
};

}  // namespace nlemu
