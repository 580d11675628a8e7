#ifndef KSK_ERRORS_HPP
#define KSK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ksk {

// Invalid configuration or inconsistent user input.  CLI maps this to exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure at run time (divergence, CFL violation, singular solve).
// CLI maps this to exit code 1.
class numerics_error : public std::runtime_error {
public:
    explicit numerics_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ksk

#endif
