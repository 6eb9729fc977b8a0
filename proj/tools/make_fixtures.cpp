// SPDX-License-Identifier: Apache-2.0
// Regenerates the fixture tree, or verifies it with --check.
#include "hiplan/golden.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv)
{
    CLI::App app {"Regenerate household fixtures"};
    std::string dir = HIPLAN_FIXTURES_DIR;
    bool check = false;
    app.add_option("--dir", dir, "fixture directory");
    app.add_flag("--check", check, "compare instead of writing");
    CLI11_PARSE(app, argc, argv);

    int stale = 0;
    for (const auto& [rel, content]: hiplan::golden::generate_fixtures())
    {
        const auto path = std::filesystem::path(dir) / rel;
        if (check)
        {
            std::ifstream in(path, std::ios::binary);
            std::ostringstream existing;
            existing << in.rdbuf();
            if (!in || existing.str() != content)
            {
                std::cerr << "stale: " << path.string() << '\n';
                ++stale;
            }
            continue;
        }
        std::filesystem::create_directories(path.parent_path());
        std::ofstream(path, std::ios::binary) << content;
        std::cout << "wrote " << path.string() << '\n';
    }
    return stale == 0 ? 0 : 1;
}
