#pragma once

#include <stdexcept>
#include <string>

namespace scar {

// Base of the library's error hierarchy. ValidationError covers bad inputs,
// configs and manifests (CLI exit code 1); RuntimeFailure covers I/O and
// numeric breakdowns discovered mid-run (CLI exit code 2).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct RuntimeFailure : Error {
    using Error::Error;
};

#define SCAR_DEFINE_ERROR(NAME, BASE)                                        \
    struct NAME : BASE {                                                     \
        explicit NAME(const std::string& what) : BASE(#NAME ": " + what) {}  \
    }

SCAR_DEFINE_ERROR(InvalidRadius, ValidationError);
SCAR_DEFINE_ERROR(EmptyMask, ValidationError);
SCAR_DEFINE_ERROR(ShapeMismatch, ValidationError);
SCAR_DEFINE_ERROR(EmptyClip, ValidationError);
SCAR_DEFINE_ERROR(MissingFile, ValidationError);
SCAR_DEFINE_ERROR(DecodeError, ValidationError);
SCAR_DEFINE_ERROR(BadManifest, ValidationError);
SCAR_DEFINE_ERROR(BadConfig, ValidationError);
SCAR_DEFINE_ERROR(InvalidSpec, ValidationError);
SCAR_DEFINE_ERROR(InvalidTimestep, ValidationError);
SCAR_DEFINE_ERROR(IndivisibleShape, ValidationError);
SCAR_DEFINE_ERROR(InvalidSteps, ValidationError);
SCAR_DEFINE_ERROR(MissingReference, ValidationError);
SCAR_DEFINE_ERROR(IoError, RuntimeFailure);
SCAR_DEFINE_ERROR(NonFiniteLoss, RuntimeFailure);

#undef SCAR_DEFINE_ERROR

}  // namespace scar
