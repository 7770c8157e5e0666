#pragma once

#include <stdexcept>
#include <string>

namespace xpomcp {

// Base for everything thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file (trace line, rule text). Carries a location when known.
struct ParseError : Error {
    ParseError(const std::string& msg, int line = -1, int column = -1)
        : Error(format(msg, line, column)), line(line), column(column) {}
    int line;
    int column;

private:
    static std::string format(const std::string& msg, int line, int column) {
        std::string out = msg;
        if (line >= 0) {
            out += " (line " + std::to_string(line);
            if (column >= 0) out += ", column " + std::to_string(column);
            out += ")";
        }
        return out;
    }
};

// Structurally valid input that violates a documented invariant.
struct ValidationError : Error {
    using Error::Error;
};

// Misuse of an API contract (out-of-range action, bad distribution, ...).
struct ContractError : Error {
    using Error::Error;
};

// Particle filter lost all particles and reinvigoration cannot recover.
struct ParticleDeprivationError : Error {
    using Error::Error;
};

// Hard `where` constraints cannot be satisfied.
struct InfeasibleTemplateError : Error {
    using Error::Error;
};

// External solver failed, timed out or produced unreadable output.
struct BackendError : Error {
    using Error::Error;
};

// Enumeration oracle asked to solve an instance above its bounds.
struct OracleBoundError : Error {
    using Error::Error;
};

// Rule body region over the simplex is empty or vanishingly small.
struct UnsatRegionError : Error {
    using Error::Error;
};

}  // namespace xpomcp
