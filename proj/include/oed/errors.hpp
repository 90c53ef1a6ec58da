#pragma once

#include <stdexcept>
#include <cstddef>
#include <string>
#include <vector>

namespace oed {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed arguments or configuration.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// A matrix function was asked for outside its domain (e.g. a singular argument).
class DomainError : public Error {
public:
    DomainError(const std::string& what, double lambda_min)
        : Error(what), lambda_min_(lambda_min) {}
    double lambda_min() const noexcept { return lambda_min_; }

private:
    double lambda_min_;
};

class NumericFailure : public Error {
public:
    using Error::Error;
};

// Gradient requested where the criterion is not differentiable.
class NonSmoothPoint : public Error {
public:
    using Error::Error;
};

class ModelEvaluationError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double time)
        : Error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

// No design on the candidate set has a finite criterion value.
class InfeasibleStart : public Error {
public:
    using Error::Error;
};

// Atom construction failed at some design points.
class AtomBuildError : public Error {
public:
    AtomBuildError(const std::string& what, std::vector<std::size_t> indices)
        : Error(what), indices_(std::move(indices)) {}
    const std::vector<std::size_t>& indices() const noexcept { return indices_; }

private:
    std::vector<std::size_t> indices_;
};

class UnsupportedSize : public Error {
public:
    using Error::Error;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

} // namespace oed
