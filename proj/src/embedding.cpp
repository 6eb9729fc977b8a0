// SPDX-License-Identifier: Apache-2.0
#include "hiplan/embedding.hpp"

#include <cctype>

namespace hiplan
{

namespace
{

std::uint64_t fnv1a(std::string_view token)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c: token)
    {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

HashingEmbedder::HashingEmbedder(int dimension): _dimension(dimension)
{
    if (dimension < 1)
        throw Error("embedding dimension must be >= 1");
}

std::vector<std::string> HashingEmbedder::tokenize(std::string_view text)
{
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c: text)
    {
        if (std::isalnum(c))
            current += static_cast<char>(std::tolower(c));
        else if (!current.empty())
            tokens.push_back(std::exchange(current, {}));
    }
    if (!current.empty())
        tokens.push_back(std::move(current));
    return tokens;
}

Embedding HashingEmbedder::raw_features(std::string_view text) const
{
    Embedding v = Embedding::Zero(_dimension);
    for (const auto& token: tokenize(text))
        v(static_cast<Eigen::Index>(fnv1a(token) % static_cast<std::uint64_t>(_dimension))) += 1.0;
    return v;
}

Embedding HashingEmbedder::embed(std::string_view text) const
{
    return normalized_or_basis(raw_features(text));
}

} // namespace hiplan
