#pragma once

#include <stdexcept>
#include <string>

namespace scnp {

// Base type for every recoverable failure raised by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- input / parsing ---------------------------------------------------
struct ParseError : Error { using Error::Error; };
struct InconsistentSize : Error { using Error::Error; };
struct UnknownNode : Error { using Error::Error; };
struct TooFewNodes : Error { using Error::Error; };
struct InvalidGraph : Error { using Error::Error; };

// --- linear algebra ----------------------------------------------------
struct ZeroDegree : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct SingularSystem : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };

// --- training ----------------------------------------------------------
struct EmptyMask : Error { using Error::Error; };
struct StaleCache : Error { using Error::Error; };
struct MissingArtifact : Error { using Error::Error; };

// --- files -------------------------------------------------------------
struct IoError : Error { using Error::Error; };
struct CorruptFile : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };

// --- cli ---------------------------------------------------------------
struct ConfigError : Error { using Error::Error; };

}  // namespace scnp
