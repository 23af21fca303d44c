#include "edge_ops/errors.hpp"

namespace edge {

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::invalid_argument: return "invalid-argument";
        case ErrorKind::out_of_range: return "out-of-range";
        case ErrorKind::invalid_state: return "invalid-state";
        case ErrorKind::window_too_short: return "window-too-short";
        case ErrorKind::near_eigenvalue: return "near-eigenvalue";
        case ErrorKind::hard_eigenvalue_collision: return "hard-eigenvalue-collision";
        case ErrorKind::indeterminate_count: return "indeterminate-count";
        case ErrorKind::undefined_inverse: return "undefined-inverse";
        case ErrorKind::io_error: return "io-error";
    }
    return "error";
}

}  // namespace edge
