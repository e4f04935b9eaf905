/*
 Copyright 2026 The thruster-biped Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef BIPED_ERRORS_HPP
#define BIPED_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace biped {

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerically singular matrix where the model guarantees regularity
// (mass matrix, contact KKT system, decoupling matrix, partition block).
class SingularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class DesignInfeasible : public std::runtime_error {
public:
    DesignInfeasible(const std::string& what, double s)
        : std::runtime_error(what), s_(s) {}
    /// Normalized phase at which the design check failed.
    double s() const noexcept { return s_; }

private:
    double s_;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace biped

#endif  // BIPED_ERRORS_HPP
