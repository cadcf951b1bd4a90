#pragma once

#include <stdexcept>
#include <string>

namespace memloss {

/// Input violates an operation's documented precondition.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Root finding inside a branch did not converge.
class MalformedBranch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Cylinder refinement exceeded the configured cap.
class PartitionExplosion : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A proved bound failed numerically (positivity floor, cone membership).
class CertificateViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scenario configuration is invalid or inconsistent.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace memloss
