#pragma once

#include <stdexcept>
#include <string>

namespace isoseq {

/// Broad failure classes; the CLI maps them to process exit codes.
enum class ErrorClass : int {
    Usage = 2, // bad parameters or configuration
    Data = 3,  // well-formed request, unusable data
    Io = 4,    // filesystem / OS failures
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, std::string msg) : std::runtime_error(std::move(msg)), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

#define ISOSEQ_ERROR_TYPE(Name, Class)                                                            \
    class Name : public Error {                                                                   \
    public:                                                                                       \
        explicit Name(std::string msg) : Error(ErrorClass::Class, std::move(msg)) {}              \
    }

ISOSEQ_ERROR_TYPE(InvalidParams, Usage);
ISOSEQ_ERROR_TYPE(UsageError, Usage);
ISOSEQ_ERROR_TYPE(UnsupportedLatentDim, Usage);

ISOSEQ_ERROR_TYPE(DecodeError, Data);
ISOSEQ_ERROR_TYPE(EmptyImage, Data);
ISOSEQ_ERROR_TYPE(OutOfBounds, Data);
ISOSEQ_ERROR_TYPE(OriginNotFloor, Data);
ISOSEQ_ERROR_TYPE(NoFloor, Data);
ISOSEQ_ERROR_TYPE(Unreachable, Data);
ISOSEQ_ERROR_TYPE(ExhaustedRetries, Data);
ISOSEQ_ERROR_TYPE(TrajectoryTooShort, Data);
ISOSEQ_ERROR_TYPE(FormatError, Data);
ISOSEQ_ERROR_TYPE(HeaderMismatch, Data);
ISOSEQ_ERROR_TYPE(ShapeMismatch, Data);
ISOSEQ_ERROR_TYPE(EmptyInput, Data);

ISOSEQ_ERROR_TYPE(IoError, Io);

#undef ISOSEQ_ERROR_TYPE

} // namespace isoseq
