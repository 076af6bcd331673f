// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace odorgen {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ODORGEN_DEFINE_ERROR(Name)            \
  class Name : public ::odorgen::Error {      \
   public:                                    \
    using ::odorgen::Error::Error;            \
  }

// Shared across modules.
ODORGEN_DEFINE_ERROR(IndexOutOfRange);
ODORGEN_DEFINE_ERROR(UnknownElement);
ODORGEN_DEFINE_ERROR(FileNotFound);
ODORGEN_DEFINE_ERROR(FormatError);
ODORGEN_DEFINE_ERROR(EmptyDataset);

}  // namespace odorgen
