#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace isac {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

// Error hierarchy. The CLI maps InfeasibleError to exit code 2 and every
// other isac::Error to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& what, double bound)
        : Error(what), bound_(bound) {}

    /// The largest attainable value of the violated quantity (e.g. capacity).
    double bound() const noexcept { return bound_; }

private:
    double bound_;
};

class NumericalError : public Error {
public:
    NumericalError(const std::string& what, long iteration, double residual)
        : Error(what), iteration_(iteration), residual_(residual) {}

    long iteration() const noexcept { return iteration_; }
    double residual() const noexcept { return residual_; }

private:
    long iteration_;
    double residual_;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Uniform-linear-array response; unit-modulus entries.
struct SteeringVector {
    CVector entries;

    Eigen::Index size() const { return entries.size(); }
    double norm2() const { return entries.squaredNorm(); }
};

/// Deterministic pilot block S_p (n_tx x slots) with orthonormal rows.
struct PilotMatrix {
    CMatrix entries;
};

/// Communication channel G (n_rx_comm x n_tx).
struct CommChannel {
    CMatrix entries;
};

/// Transmit covariance Theta = F F^H (n_tx x n_tx, Hermitian PSD).
struct PrecoderCovariance {
    CMatrix entries;

    Eigen::Index dim() const { return entries.rows(); }
    double trace() const { return entries.trace().real(); }
};

}  // namespace isac
