#pragma once

#include <stdexcept>
#include <string>

namespace hemopt {

// Bad input: malformed data files, inconsistent parameters, broken invariants.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A well-formed problem with no feasible solution. CLI exit code 3.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace hemopt
