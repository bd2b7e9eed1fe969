#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace apc {

// Hard failure carrying a stable machine-readable code (E_ARITY, E_IO, ...).
// Recoverable user-input problems travel as diagnostic lists instead of
// exceptions; see patch_text.hpp and ode.hpp.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace apc
