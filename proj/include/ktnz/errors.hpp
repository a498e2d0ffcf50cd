#pragma once

#include <stdexcept>
#include <string>

namespace ktnz {

enum class ErrorCode {
    SizeMismatch,
    BadPermutation,
    SpecMismatch,
    NoConvergence,
    BadRank,
    NonIntegralGeometry,
    NonPositiveOutput,
    ChannelMismatch,
    BadMagic,
    UnsupportedVersion,
    ShapeInconsistency,
    TruncatedFile,
    BadRecordSize,
    BadLabel,
    DivergenceDetected,
    SingularUpdate,
    ZeroSpectrum,
    BadConfig,
    Unsupported,
};

/// Single exception type for the whole library; the code tells tests and
/// callers which contract was violated.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace ktnz
