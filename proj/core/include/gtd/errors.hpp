#ifndef GTD_ERRORS_HPP_
#define GTD_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace gtd {

// Dimension mismatches are reported as std::invalid_argument and mode indices
// as std::out_of_range. The two types below carry distinct CLI exit codes.

/// Malformed configuration, unreadable input or unsupported file format.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Parse failure in one of the text/binary file formats.
class FormatError : public ConfigError {
 public:
  explicit FormatError(const std::string& what) : ConfigError(what) {}
};

/// A solve could not proceed (singular system, non-finite iterate, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gtd

#endif  // GTD_ERRORS_HPP_
