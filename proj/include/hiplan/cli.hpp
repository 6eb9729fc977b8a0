// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hiplan/household.hpp"
#include "hiplan/llm.hpp"

#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace hiplan::cli
{

namespace exit_code
{
inline constexpr int kOk = 0;
inline constexpr int kTaskFailure = 1;
inline constexpr int kBelowThreshold = 2;
inline constexpr int kUsage = 64;
inline constexpr int kInternal = 70;
} // namespace exit_code

class UsageError: public Error
{
  public:
    using Error::Error;
};

/// Owns a backend chain built from `scripted:PATH`, `http:MODEL` or
/// `cached:INNER@PATH`.
class BackendStack
{
  public:
    explicit BackendStack(const std::string& spec);

    llm::Backend& top() { return *_layers.back(); }

  private:
    void build(const std::string& spec);

    std::vector<std::unique_ptr<llm::CompletionCache>> _caches;
    std::vector<std::unique_ptr<llm::Backend>> _layers;
};

/// `household:KIND` or `household:KIND:OBJECT:TARGET`; the short form reads
/// object and target from the task text. Throws UsageError.
sim::TaskSpec parse_env(const std::string& env, const std::string& task);

/// Whole command line without the program name. Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace hiplan::cli
