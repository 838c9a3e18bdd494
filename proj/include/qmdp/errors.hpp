/*
 * Copyright 2026 The qmdp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace qmdp {

// Exception hierarchy. The CLI maps each family onto an exit code:
// ValidationError -> 1, CapacityError -> 2, UnsatisfiableError -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    using Error::Error;
};

class UnsatisfiableError : public Error {
public:
    using Error::Error;
};

// A state whose outcome probabilities both vanish; only reachable through
// an unnormalized (corrupted) amplitude array.
class DegenerateStateError : public Error {
public:
    using Error::Error;
};

}  // namespace qmdp
