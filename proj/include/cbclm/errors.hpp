// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cbclm {

// Bad flags, bad config keys/values, missing resources for a method.
// The CLI maps this to exit code 1.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (corpus files, annotation sidecars,
// checkpoints, metrics files). The CLI maps this to exit code 2.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cbclm
