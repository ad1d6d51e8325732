#pragma once

#include <stdexcept>
#include <string>

namespace pet {

// Base type for everything this library throws. Each concrete class maps to
// one failure condition so callers (and the CLI exit-code mapping) can
// distinguish bad usage from invalid data.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- label encoding ---
class CategoryOutOfRange : public Error {
 public:
  using Error::Error;
};
class InstanceIdOverflow : public Error {
 public:
  using Error::Error;
};
class StuffWithNonzeroInstance : public Error {
 public:
  using Error::Error;
};
class MalformedLabel : public Error {
 public:
  using Error::Error;
};
class InvalidSegmentLabel : public Error {
 public:
  using Error::Error;
};

// --- numeric operations ---
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};
class NonPositiveSigma : public Error {
 public:
  using Error::Error;
};
class NonPositiveTemperature : public Error {
 public:
  using Error::Error;
};
class NonPositiveEps : public Error {
 public:
  using Error::Error;
};
class NegativeComponent : public Error {
 public:
  using Error::Error;
};
class MissingCenter : public Error {
 public:
  using Error::Error;
};
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// --- evaluation ---
class InvalidThreshold : public Error {
 public:
  using Error::Error;
};
class TaxonomyMismatch : public Error {
 public:
  using Error::Error;
};

// --- synthesis ---
class InfeasibleParams : public Error {
 public:
  using Error::Error;
};

// --- file formats ---
class IoFailure : public Error {
 public:
  using Error::Error;
};
class BadMagic : public Error {
 public:
  using Error::Error;
};
class TruncatedPayload : public Error {
 public:
  using Error::Error;
};
class DimOverflow : public Error {
 public:
  using Error::Error;
};
class UnknownSourceId : public Error {
 public:
  using Error::Error;
};
class LabelOverflow : public Error {
 public:
  using Error::Error;
};

}  // namespace pet
