#pragma once

#include <stdexcept>
#include <string>

namespace crofton {

// Violated precondition: dimension mismatch, malformed input, bad option.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Root counting did not stabilize under grid refinement.
class CountingFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The polynomial-fit mixed volume oracle could not produce a trustworthy value.
class OracleFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A closed-form Crofton density is not known for some factor.
class UnsupportedPrediction : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ContractError(what);
}

}  // namespace crofton
