#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace expdet {

// Base for every structured error the library raises.  `code()` is a stable
// machine-readable identifier; `index()` is the offending position where one
// exists (-1 otherwise).  The CLI maps categories to exit codes:
// validation -> 2, check failure -> 1, precision exhaustion -> 3.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, long index = -1)
        : std::runtime_error(message), code_(std::move(code)), index_(index) {}

    const std::string& code() const noexcept { return code_; }
    long index() const noexcept { return index_; }

private:
    std::string code_;
    long index_;
};

// Rejected input: empty/unsorted node lists, bad dimensions, out-of-range
// parameters.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A contract that can only break through an arithmetic defect, such as a
// nonpositive determinant of a matrix that is totally positive by theorem.
class CheckFailure : public Error {
public:
    using Error::Error;
};

} // namespace expdet
