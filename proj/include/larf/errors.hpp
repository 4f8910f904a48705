#pragma once

#include <stdexcept>
#include <string>

namespace larf {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyDataset : Error {
    using Error::Error;
};

struct InvalidConfig : Error {
    using Error::Error;
};

struct InvalidSpec : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

struct NonpositiveTemperature : Error {
    using Error::Error;
};

struct InvalidBounds : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct ParseError : Error {
    std::size_t row;
    std::size_t col;
    ParseError(std::size_t r, std::size_t c, const std::string& what_arg)
        : Error("parse error at row " + std::to_string(r) + ", column " +
                std::to_string(c) + ": " + what_arg),
          row(r), col(c) {}
};

struct MissingTarget : Error {
    using Error::Error;
};

struct TooFewRows : Error {
    using Error::Error;
};

struct ConstantTarget : Error {
    using Error::Error;
};

struct VariantKernelMismatch : Error {
    using Error::Error;
};

struct MismatchedCells : Error {
    using Error::Error;
};

} // namespace larf
