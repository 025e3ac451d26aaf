#pragma once

#include <stdexcept>
#include <string>

namespace cdma {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// signature construction / audit
struct ZeroColumn : Error { using Error::Error; };
struct BoundExceeded : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };

// matrix file I/O
struct ParseError : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };

// channel
struct EmptyBatch : Error { using Error::Error; };

// estimators
struct SingularModel : Error { using Error::Error; };
struct NotIdentifiable : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct RankDeficientStack : Error { using Error::Error; };

// decoder
struct NoInvertibleBlock : Error { using Error::Error; };
struct TooManyFreeBits : Error { using Error::Error; };

// experiments / CLI
struct ConfigError : Error { using Error::Error; };

}  // namespace cdma
