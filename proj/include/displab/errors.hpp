#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace displab {

// Base of every exception thrown by the library. The C API maps each
// subclass onto a displab_status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// gcd(a, m) > 1 in a modular inversion.
class NotInvertible : public Error {
 public:
  NotInvertible(std::int64_t a, std::int64_t m, std::int64_t gcd)
      : Error("not invertible: gcd(" + std::to_string(a) + ", " + std::to_string(m) +
              ") = " + std::to_string(gcd)),
        gcd_(gcd) {}
  std::int64_t gcd() const noexcept { return gcd_; }

 private:
  std::int64_t gcd_;
};

// A table or range would exceed the configured memory cap.
class SizingError : public Error {
 public:
  using Error::Error;
};

// A computation would exceed its configured work budget.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, double estimated_cost, double budget)
      : Error(what + ": estimated cost " + std::to_string(estimated_cost) +
              " exceeds budget " + std::to_string(budget)),
        estimated_cost_(estimated_cost) {}
  double estimated_cost() const noexcept { return estimated_cost_; }

 private:
  double estimated_cost_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : Error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace displab
