// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MINDPRINT_ERROR_HPP_
#define MINDPRINT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mindprint {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments. The CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad, missing or inconsistent data. The CLI maps it to exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

// Unreadable or unwritable source.
class IoError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace mindprint

#endif  // MINDPRINT_ERROR_HPP_
