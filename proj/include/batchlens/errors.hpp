#pragma once

#include <stdexcept>
#include <string>

namespace batchlens {

/// A file that is missing, unreadable or malformed. Reported as a user error.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace batchlens
