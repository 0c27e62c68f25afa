#pragma once

#include <stdexcept>
#include <string>

namespace spatspark {

// Error kinds map onto the CLI exit-code contract:
//   config/contract/dimension -> 2, data -> 3, numeric -> 4.
enum class ErrKind {
    config,     // bad flags, invalid configuration, fingerprint mismatch
    data,       // corrupt or unusable payloads (bad magic, truncation, checksum)
    numeric,    // NaN/Inf produced by a computation
    contract,   // API precondition violated
    dimension,  // shape mismatch between arrays
};

class Error : public std::runtime_error {
public:
    Error(ErrKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrKind kind() const { return kind_; }

private:
    ErrKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrKind::config, msg); }
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrKind::data, msg); }
[[noreturn]] inline void throw_numeric(const std::string& msg) { throw Error(ErrKind::numeric, msg); }
[[noreturn]] inline void throw_contract(const std::string& msg) { throw Error(ErrKind::contract, msg); }
[[noreturn]] inline void throw_dim(const std::string& msg) { throw Error(ErrKind::dimension, msg); }

}  // namespace spatspark
