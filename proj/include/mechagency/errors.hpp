/* Copyright 2026 The Mechagency Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace mechagency {

enum class ErrorCode {
  invalid_argument,
  non_finite_domain,
  no_convergence,
  incomplete_solution,
  empty_domain,
  empty_response_set,
  missing_variables,
  partial_collection,
  too_many_settings,
  negative_preference,
  invalid_config,
  degenerate_design,
  shape_mismatch,
  non_finite,
  unknown_example,
  io,
};

const char* to_string(ErrorCode code);

// Single exception type for the core library. The C API maps `code()` onto
// its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double residual, long iterations)
      : Error(ErrorCode::no_convergence, what),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  long iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

}  // namespace mechagency
