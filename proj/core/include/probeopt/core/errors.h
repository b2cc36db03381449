// Copyright 2026 The ProbeOpt Authors
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

#ifndef PROBEOPT_CORE_ERRORS_H_
#define PROBEOPT_CORE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace probeopt {

// Precondition violated by the caller.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Incompatible array shapes or element counts.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN or infinity where a finite value is required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Metric with an empty denominator (e.g. F1 with no labels).
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Motion commanded outside the reachable workspace.
class WorkspaceError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Corrupt, truncated or incompatible file.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace probeopt

#endif  // PROBEOPT_CORE_ERRORS_H_
