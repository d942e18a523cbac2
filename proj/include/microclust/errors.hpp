#pragma once

#include <stdexcept>
#include <string>

namespace microclust {

// Malformed or inconsistent input data (files, tables, label vectors).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine failed to produce a usable answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace microclust
