#pragma once

#include <stdexcept>
#include <string>

namespace etf {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ETF_ERROR(Name)                                  \
  class Name : public Error {                           \
   public:                                              \
    explicit Name(const std::string& what) : Error(what) {} \
  }

ETF_ERROR(NumericError);           // NaN or other non-finite intermediate
ETF_ERROR(Overflow);               // value not representable as a double
ETF_ERROR(DirectionUndecidable);   // sign of cos(arg) cannot be decided
ETF_ERROR(ArgInvalid);             // argument needed but lost to saturation
ETF_ERROR(NonConvergence);
ETF_ERROR(QuadratureError);
ETF_ERROR(InvalidSpec);
ETF_ERROR(TailNotDecaying);
ETF_ERROR(Unsupported);
ETF_ERROR(InvalidParams);
ETF_ERROR(InsufficientTail);
ETF_ERROR(WindowTooSmall);
ETF_ERROR(TooManySquares);
ETF_ERROR(IoError);

#undef ETF_ERROR

}  // namespace etf
