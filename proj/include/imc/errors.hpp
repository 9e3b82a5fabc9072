// Copyright 2026 The imc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IMC_ERRORS_HPP_
#define IMC_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace imc {

// Bad arguments: dimension mismatches, out-of-range parameters, malformed
// files. The CLI maps these to exit code 1.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure could not deliver its contract (non-convergence,
// rank deficiency, divergence). The CLI maps these to exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public NumericError {
 public:
  explicit DivergenceError(int epoch)
      : NumericError("iterate diverged (non-finite entry) at epoch " +
                     std::to_string(epoch)),
        epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace imc

#endif  // IMC_ERRORS_HPP_
