#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ancl {

// Row-major everywhere: sample matrices are n x d with one sample per row,
// and the raw buffer matches the on-disk layout of the dataset format.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape or size mismatch between operands.
struct DimensionError : Error {
    using Error::Error;
};

/// A documented precondition was violated by the caller.
struct ContractError : Error {
    using Error::Error;
};

/// Normalization of a (near-)zero vector; signals feature collapse.
struct NormalizationError : Error {
    using Error::Error;
};

/// Data too degenerate for the requested operation (e.g. rank-deficient
/// covariance past the ridge fallback).
struct DegenerateDataError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

/// A verification check did not meet its threshold.
struct CheckFailure : Error {
    using Error::Error;
};

// CLI exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitIo = 2,
    kExitCheckFailure = 3,
};

}  // namespace ancl
