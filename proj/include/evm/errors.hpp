#pragma once

#include <stdexcept>

namespace evm {

/// Base of every exception thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument and construction errors.
struct InvalidArgument : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct ZeroVector : Error { using Error::Error; };

// Tail extraction and Weibull fitting.
struct EmptyNegatives : Error { using Error::Error; };
struct TooFewSamples : Error { using Error::Error; };
struct DegenerateTail : Error { using Error::Error; };
struct NonPositiveValue : Error { using Error::Error; };

// Model reduction.
struct LengthMismatch : Error { using Error::Error; };
struct UncoverableUniverse : Error { using Error::Error; };
struct BudgetZero : Error { using Error::Error; };

// Training and prediction.
struct SingleClassDataset : Error { using Error::Error; };
struct UnknownClassId : Error { using Error::Error; };

// Evaluation harness.
struct InvalidOpenness : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct CountMismatch : Error { using Error::Error; };
struct InsufficientClasses : Error { using Error::Error; };

// File input and output.
struct FileError : Error { using Error::Error; };
struct RaggedRows : Error { using Error::Error; };
struct NonNumericFeature : Error { using Error::Error; };
struct EmptyFile : Error { using Error::Error; };
struct NonAscendingIndices : Error { using Error::Error; };
struct MalformedEntry : Error { using Error::Error; };
struct BadMagic : Error { using Error::Error; };
struct VersionUnsupported : Error { using Error::Error; };
struct TruncatedFile : Error { using Error::Error; };

}  // namespace evm
