#pragma once

#include <stdexcept>
#include <string>

namespace terra_risk {

/// Failure categories; the CLI maps them onto process exit codes.
enum class ErrorKind {
    Parameter,   // invalid argument to a generator or estimator
    Graph,       // malformed edge or path geometry
    Input,       // malformed data handed to an operation
    Config,      // experiment configuration problems
    Data,        // missing/corrupt files on disk
    Numerical,   // factorization or other numerical breakdown
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ParameterError : Error {
    explicit ParameterError(const std::string& w) : Error(ErrorKind::Parameter, w) {}
};
struct GraphError : Error {
    explicit GraphError(const std::string& w) : Error(ErrorKind::Graph, w) {}
};
struct InputError : Error {
    explicit InputError(const std::string& w) : Error(ErrorKind::Input, w) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct DataError : Error {
    explicit DataError(const std::string& w) : Error(ErrorKind::Data, w) {}
};
struct FitError : Error {
    explicit FitError(const std::string& w) : Error(ErrorKind::Numerical, w) {}
};

}  // namespace terra_risk
