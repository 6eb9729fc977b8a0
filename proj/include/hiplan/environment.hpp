// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace hiplan
{

struct StepResult
{
    std::string observation;
    bool done = false;
    bool success = false;
    double reward = 0.0;
};

/// Text environment driven by one episode loop.
class Environment
{
  public:
    virtual ~Environment() = default;

    /// Restores the initial state and returns the reset observation.
    virtual std::string reset() = 0;
    virtual StepResult step(std::string_view action) = 0;
};

} // namespace hiplan
