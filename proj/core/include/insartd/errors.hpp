#pragma once

#include <stdexcept>
#include <string>

namespace insartd {

/// Raised when an iterative routine produces non-finite values or a
/// factorization cannot be completed. The message names the offending
/// stage (and iteration, where applicable).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace insartd
