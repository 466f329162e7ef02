#pragma once

#include <stdexcept>
#include <string>

namespace tabmoe {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible tensor/parameter shapes.
struct DimensionError : Error {
    using Error::Error;
};

// Argument outside its mathematical domain (tau <= 0, empty batch, ...).
struct DomainError : Error {
    using Error::Error;
};

// Malformed manifests, CSV rows, configs. CLI exit code 2.
struct ValidationError : Error {
    using Error::Error;
};

// Referenced file or tuned config does not exist. CLI exit code 3.
struct MissingArtifactError : Error {
    using Error::Error;
};

// Non-finite losses or other numeric breakdown. CLI exit code 4.
struct NumericError : Error {
    using Error::Error;
};

} // namespace tabmoe
