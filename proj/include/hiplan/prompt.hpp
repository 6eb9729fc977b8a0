// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hiplan/core.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>

namespace hiplan
{

class TemplateError: public Error
{
  public:
    using Error::Error;
};

inline constexpr std::string_view kExtractionPrompt = "milestone_extraction.txt";
inline constexpr std::string_view kGuidePrompt = "guide_alfworld.txt";
inline constexpr std::string_view kHintPrompt = "hint_alfworld.txt";
inline constexpr std::string_view kActionPrompt = "action_alfworld.txt";

/// Text template with `{NAME}` placeholders (NAME in [A-Z0-9_], leading
/// letter) and optional sections delimited by lines that read exactly
/// `{#NAME}` and `{/NAME}`. Any other brace text is literal.
class PromptTemplate
{
  public:
    PromptTemplate(std::string name, std::string text);

    static PromptTemplate load(const std::filesystem::path& path);

    [[nodiscard]] const std::string& name() const noexcept { return _name; }
    [[nodiscard]] const std::string& text() const noexcept { return _text; }

    /// Disabled sections are dropped together with their delimiter lines and
    /// need no values. Throws TemplateError on an unresolved placeholder or
    /// unbalanced section.
    [[nodiscard]] std::string render(const std::map<std::string, std::string>& values,
                                     const std::set<std::string>& sections = {}) const;

  private:
    std::string _name;
    std::string _text;
};

/// Loads templates from one directory and caches them. Thread-safe.
class PromptStore
{
  public:
    explicit PromptStore(std::filesystem::path dir = default_dir());

    /// HIPLAN_PROMPTS_DIR when set, otherwise the prompts/ directory of the
    /// source tree this binary was built from.
    static std::filesystem::path default_dir();

    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return _dir; }

    /// Throws TemplateError when the asset is missing.
    const PromptTemplate& get(std::string_view name) const;

  private:
    std::filesystem::path _dir;
    mutable std::mutex _mutex;
    mutable std::map<std::string, std::unique_ptr<PromptTemplate>, std::less<>> _cache;
};

} // namespace hiplan
