#pragma once

#include <stdexcept>
#include <string>

namespace fracback {

/// Base class for all errors raised by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid argument or precondition violation (bad alpha, negative x, ...).
struct domain_error : error {
    using error::error;
};

/// A coefficient set failed one of the structural assumptions
/// (ellipticity, symmetry, positive semidefiniteness).
struct validation_error : error {
    using error::error;
};

/// An iterative or adaptive procedure failed to reach its tolerance.
struct convergence_error : error {
    using error::error;
};

/// Shape or grid mismatch between fields/operators.
struct shape_error : error {
    using error::error;
};

/// File format or filesystem failure.
struct io_error : error {
    using error::error;
};

} // namespace fracback
