#pragma once

#include <stdexcept>
#include <string>

namespace ldt {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownModel : Error { using Error::Error; };
struct InvalidParam : Error { using Error::Error; };
struct DegenerateDiffusion : Error { using Error::Error; };
struct DecompositionMismatch : Error { using Error::Error; };
struct SingularDiffusion : Error { using Error::Error; };
struct BlowUp : Error { using Error::Error; };
struct EmptySupport : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };
struct UnstableStep : Error { using Error::Error; };
struct DimUnsupported : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct NotDetailedBalance : Error { using Error::Error; };
struct KernelInvalid : Error { using Error::Error; };
struct NegativeAlpha : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IOError : Error { using Error::Error; };

}  // namespace ldt
