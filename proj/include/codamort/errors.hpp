#pragma once

#include <stdexcept>
#include <string>

namespace codamort {

/// Base class for every error raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- compositional primitives -----------------------------------------

struct NonPositiveEntry : Error { using Error::Error; };
struct TooShort : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct DeltaTooLarge : Error { using Error::Error; };

/// The pre-power argument of the inverse alpha-transformation has a
/// negative component: the point lies outside the image of the forward
/// map. Callers either penalize (tuning) or clamp (forecasting).
struct NegativeDetectionLimit : Error { using Error::Error; };

// --- life tables -------------------------------------------------------

struct MissingCell : Error { using Error::Error; };
struct ExposureAllZero : Error { using Error::Error; };
struct AllZeroRow : Error { using Error::Error; };
struct DataTooSparse : Error { using Error::Error; };
struct FitDiverged : Error { using Error::Error; };
struct InvalidRate : Error { using Error::Error; };

// --- time series -------------------------------------------------------

struct SeriesTooShort : Error { using Error::Error; };
struct NonInvertible : Error { using Error::Error; };

// --- pipeline ----------------------------------------------------------

struct GapInYears : Error { using Error::Error; };
struct RowNotComposition : Error { using Error::Error; };
struct RankTooLarge : Error { using Error::Error; };

// --- tuning ------------------------------------------------------------

struct WrongLength : Error { using Error::Error; };
struct AllPenalized : Error { using Error::Error; };

// --- evaluation --------------------------------------------------------

struct ShapeMismatch : Error { using Error::Error; };

// --- ingest ------------------------------------------------------------

struct MalformedRow : Error { using Error::Error; };
struct MissingAgeLadder : Error { using Error::Error; };
struct WindowNotCovered : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace codamort
