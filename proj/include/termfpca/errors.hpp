#pragma once

#include <stdexcept>
#include <string>

namespace termfpca {

/// Coarse error category, mapped to CLI exit codes (input=1, numeric=2, io=3).
enum class errc { input = 1, numeric = 2, io = 3 };

class Error : public std::runtime_error {
public:
    Error(errc kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    errc kind() const noexcept { return kind_; }

private:
    errc kind_;
};

[[noreturn]] inline void throw_input(const std::string& msg) { throw Error(errc::input, msg); }
[[noreturn]] inline void throw_numeric(const std::string& msg) { throw Error(errc::numeric, msg); }
[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(errc::io, msg); }

}  // namespace termfpca
