#pragma once

#include <stdexcept>
#include <string>

namespace wcoj {

// Failure categories, aligned with the CLI exit codes.
enum class Errc {
    internal = 1,
    parse = 2,
    incompatible = 3,
    unbounded = 4,
    derive_incomplete = 5,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const { return code_; }
    int exit_code() const { return static_cast<int>(code_); }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace wcoj
