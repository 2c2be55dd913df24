#pragma once

#include <stdexcept>
#include <string>

namespace reqc {

/// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent input parameters.
struct parameter_error : error {
    using error::error;
};

/// Degenerate geometry (coincident ions, zero distances).
struct geometry_error : error {
    using error::error;
};

/// Channel plan violates separation or width constraints.
struct plan_error : error {
    using error::error;
};

/// Malformed file contents; message carries field-level diagnostics.
struct schema_error : error {
    using error::error;
};

/// Unknown ion id or level in a state-vector operation.
struct addressing_error : error {
    using error::error;
};

/// Operation requested on a pair that the architecture does not couple.
struct architecture_error : error {
    using error::error;
};

/// State does not satisfy a protocol precondition.
struct protocol_error : error {
    using error::error;
};

/// Non-Hermitian or otherwise unusable operator.
struct operator_error : error {
    using error::error;
};

/// State norm is off beyond tolerance.
struct normalization_error : error {
    using error::error;
};

/// Integrator norm drift exceeded tolerance; retry with smaller dt.
struct step_size_error : error {
    using error::error;
};

/// Scan range exhausted without the sought response.
struct scan_error : error {
    using error::error;
};

/// Chain readout routing violation (non-adjacent transfer etc.).
struct routing_error : error {
    using error::error;
};

}  // namespace reqc
