#pragma once

#include <stdexcept>
#include <string>

namespace bubble {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A series or iteration failed to converge within its budget.
struct NumericalError : Error {
    using Error::Error;
};

/// A tail-exponent fit could not produce a trustworthy label.
struct IndeterminateFit : Error {
    using Error::Error;
};

/// Local-volatility recovery masked too many nodes.
struct RecoveryFailed : Error {
    using Error::Error;
};

/// A detector was called on a surface it cannot discriminate.
struct InapplicableDetector : Error {
    using Error::Error;
};

/// Closed-form bubble labelling is not available for this model.
struct UnsupportedModel : Error {
    using Error::Error;
};

/// Option-chain quotes do not cover the requested grid.
struct CoverageError : Error {
    CoverageError(const std::string& msg, std::vector<std::pair<double, double>> missing)
        : Error(msg), missing_cells(std::move(missing)) {}
    std::vector<std::pair<double, double>> missing_cells;  // (maturity, strike)
};

/// File format or checksum problem.
struct IoError : Error {
    using Error::Error;
};

}  // namespace bubble
