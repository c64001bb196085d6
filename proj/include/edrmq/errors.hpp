#pragma once

#include <stdexcept>
#include <string>

namespace edrmq {

/// Malformed, inconsistent, or semantically invalid input data.
class data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem or stream failure; message carries the offending path.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace edrmq
