#pragma once

#include <stdexcept>
#include <string>

namespace csqd {

// Error classes map one-to-one onto CLI exit classes.
enum class ErrorClass { config, input, numeric, convergence, io };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass cls() const { return cls_; }

 private:
  ErrorClass cls_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorClass::config, what) {}
};
struct InputError : Error {
  explicit InputError(const std::string& what) : Error(ErrorClass::input, what) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorClass::numeric, what) {}
};
struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& what) : Error(ErrorClass::convergence, what) {}
};
struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorClass::io, what) {}
};

inline const char* error_class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::config: return "CONFIG";
    case ErrorClass::input: return "INPUT";
    case ErrorClass::numeric: return "NUMERIC";
    case ErrorClass::convergence: return "CONVERGENCE";
    case ErrorClass::io: return "IO";
  }
  return "UNKNOWN";
}

}  // namespace csqd
