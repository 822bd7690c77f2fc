#pragma once

#include <stdexcept>
#include <string>

namespace charnmt {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform for an operation.
struct dim_error : error {
  using error::error;
};

// A caller broke a documented precondition.
struct contract_error : error {
  using error::error;
};

// An id is outside the vocabulary it is used with.
struct vocab_error : error {
  using error::error;
};

// A computation produced NaN/Inf or otherwise left the numeric domain.
struct numeric_error : error {
  using error::error;
};

// Bad run configuration: missing files, impossible limits, mismatched vocabularies.
struct config_error : error {
  using error::error;
};

}  // namespace charnmt
