// SPDX-License-Identifier: Apache-2.0
//
// Copyright (C) 2026 The qembed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace qembed {

// invalid-argument maps onto std::invalid_argument throughout the library.

/// A documented precondition of a check was violated; distinct from the
/// checked inequality failing.
class precondition_failed : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Too few usable data points for a fit.
class insufficient_data : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The set and the anti-sparsity filter admit no usable pair.
class incompatible_set : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qembed
