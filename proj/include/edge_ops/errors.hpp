#pragma once

#include <stdexcept>
#include <string>

namespace edge {

enum class ErrorKind {
    invalid_argument,
    out_of_range,
    invalid_state,
    window_too_short,
    near_eigenvalue,
    hard_eigenvalue_collision,
    indeterminate_count,
    undefined_inverse,
    io_error,
};

const char* to_string(ErrorKind k);

/// Library error carrying a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

}  // namespace edge
