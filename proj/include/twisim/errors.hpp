#ifndef TWISIM_ERRORS_HPP
#define TWISIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace twisim {

// Exit-code mapping used by the CLI: config 2, domain 3, infeasible 4, io 5.

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(const std::string& msg, double lower_bound)
        : std::runtime_error(msg), lower_bound_(lower_bound) {}

    double lower_bound() const { return lower_bound_; }

private:
    double lower_bound_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace twisim

#endif
