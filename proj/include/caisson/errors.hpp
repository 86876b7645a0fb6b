#pragma once

#include <stdexcept>
#include <string>

namespace caisson {

// Error taxonomy shared by all modules. The CLI maps these onto exit codes
// (validation -> 2, I/O -> 3, infeasible generation -> 4).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct InfeasibleError : Error {
    using Error::Error;
};

}  // namespace caisson
