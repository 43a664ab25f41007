#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dimmech {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define DIMMECH_DEFINE_ERROR(Name)                                             \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string &what) : Error(#Name ": " + what) {}       \
  };

DIMMECH_DEFINE_ERROR(MeasurandSpaceMismatch)
DIMMECH_DEFINE_ERROR(ZeroDenominator)
DIMMECH_DEFINE_ERROR(ExponentOverflow)
DIMMECH_DEFINE_ERROR(UnknownVariable)
DIMMECH_DEFINE_ERROR(DomainError)
DIMMECH_DEFINE_ERROR(NonFinite)
DIMMECH_DEFINE_ERROR(ChartMismatch)
DIMMECH_DEFINE_ERROR(NoInverseDeclared)
DIMMECH_DEFINE_ERROR(BasePointMismatch)
DIMMECH_DEFINE_ERROR(CoordinateNameClash)
DIMMECH_DEFINE_ERROR(VanishingDenominator)
DIMMECH_DEFINE_ERROR(DegenerateEta)
DIMMECH_DEFINE_ERROR(SampleOffSurface)
DIMMECH_DEFINE_ERROR(SampleOffGraph)
DIMMECH_DEFINE_ERROR(UncertifiedInput)
DIMMECH_DEFINE_ERROR(LengthMismatch)
DIMMECH_DEFINE_ERROR(LeftDomain)
DIMMECH_DEFINE_ERROR(StepUnderflow)
DIMMECH_DEFINE_ERROR(InconsistentInputs)
DIMMECH_DEFINE_ERROR(UnresolvedReference)

#undef DIMMECH_DEFINE_ERROR

/// Dimension clash between two operands, or between a declared and a
/// synthesized dimension. `path` locates the offending node when known.
class DimensionMismatch : public Error {
public:
  DimensionMismatch(const std::string &path, const std::string &expected,
                    const std::string &found)
      : Error("DimensionMismatch at " + path + ": expected [" + expected +
              "], found [" + found + "]"),
        path(path), expected(expected), found(found) {}

  std::string path;
  std::string expected;
  std::string found;
};

/// Malformed input text. `position` is a 0-based character offset.
class ParseError : public Error {
public:
  ParseError(std::size_t position, const std::string &message)
      : Error("ParseError at position " + std::to_string(position) + ": " +
              message),
        position(position), message(message) {}

  std::size_t position;
  std::string message;
};

} // namespace dimmech
