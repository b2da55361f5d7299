#pragma once

#include <stdexcept>
#include <string>

namespace cascade {

// Bad arguments: invalid indices, overlapping sets, malformed tables.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input outside the mathematical domain (non-PSD covariance, x >= s in q_map).
class NumericDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A query with no admissible solution. threshold carries the bound that failed
// (for example the minimal R2), or NaN when there is no single number to report.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double threshold)
      : std::runtime_error(what), threshold_(threshold) {}
  double threshold() const { return threshold_; }

 private:
  double threshold_;
};

// Desk-scale caps (table size, codebook size, oracle enumeration).
class ResourceError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Auxiliary system with wrong shapes, excessive alphabets or broken factorization.
class InvalidAuxiliaryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Configuration file or flag problems; line is 0 for command-line flags.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, int line, const std::string& msg)
      : std::runtime_error(format(key, line, msg)), key_(key), line_(line) {}
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& key, int line, const std::string& msg) {
    std::string where = line > 0 ? " (line " + std::to_string(line) + ")" : "";
    return "config key '" + key + "'" + where + ": " + msg;
  }
  std::string key_;
  int line_;
};

}  // namespace cascade
