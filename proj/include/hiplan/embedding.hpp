// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hiplan/core.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace hiplan
{

template <typename Scalar>
using EmbeddingVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Embedding = EmbeddingVector<double>;

using EntryId = std::int64_t;

class DimensionMismatch: public Error
{
  public:
    DimensionMismatch(Eigen::Index expected, Eigen::Index actual):
        Error("dimension mismatch: expected " + std::to_string(expected) + ", got " + std::to_string(actual))
    {
    }
};

template <typename Scalar>
constexpr Scalar unit_norm_tolerance()
{
    return std::max(Scalar(1e-6), Scalar(64) * std::numeric_limits<Scalar>::epsilon());
}

/// L2-normalised copy of `raw`; the zero vector maps to the first basis vector.
template <typename Derived>
auto normalized_or_basis(const Eigen::MatrixBase<Derived>& raw)
    -> EmbeddingVector<typename Derived::Scalar>
{
    using Scalar = typename Derived::Scalar;
    EmbeddingVector<Scalar> out = raw;
    const Scalar norm = out.norm();
    if (norm == Scalar(0))
    {
        out.setZero();
        if (out.size() > 0)
            out(0) = Scalar(1);
        return out;
    }
    out /= norm;
    return out;
}

/// Dot product of two unit vectors.
template <typename DerivedA, typename DerivedB>
auto similarity(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) ->
    typename DerivedA::Scalar
{
    if (a.size() != b.size())
        throw DimensionMismatch(a.size(), b.size());
    return a.dot(b);
}

/// Deterministic text → unit vector map.
class Embedder
{
  public:
    virtual ~Embedder() = default;

    [[nodiscard]] virtual int dimension() const = 0;
    [[nodiscard]] virtual Embedding embed(std::string_view text) const = 0;
};

/// Feature-hashed bag of lowercase alphanumeric tokens, L2-normalised.
/// Whitespace-only text embeds to e_0.
class HashingEmbedder final: public Embedder
{
  public:
    static constexpr int kDefaultDimension = 256;

    explicit HashingEmbedder(int dimension = kDefaultDimension);

    [[nodiscard]] int dimension() const override { return _dimension; }
    [[nodiscard]] Embedding embed(std::string_view text) const override;

    /// Token counts before normalisation.
    [[nodiscard]] Embedding raw_features(std::string_view text) const;

    static std::vector<std::string> tokenize(std::string_view text);

  private:
    int _dimension;
};

template <typename Scalar>
struct ScoredEntry
{
    EntryId id;
    Scalar score;

    bool operator==(const ScoredEntry&) const = default;
};

using EntryFilter = std::function<bool(EntryId)>;

/// Exact inner-product index. Entries keep insertion order and ids must be
/// strictly increasing; vectors must be unit-norm.
template <typename Scalar = double>
class VectorIndex
{
  public:
    using Vector = EmbeddingVector<Scalar>;
    using ConstMap = Eigen::Map<const Vector>;

    explicit VectorIndex(int dimension = 0): _dimension(dimension) {}

    [[nodiscard]] int dimension() const noexcept { return _dimension; }
    [[nodiscard]] std::size_t size() const noexcept { return _ids.size(); }
    [[nodiscard]] bool empty() const noexcept { return _ids.empty(); }

    [[nodiscard]] EntryId id(std::size_t row) const { return _ids.at(row); }

    [[nodiscard]] ConstMap vector(std::size_t row) const
    {
        return ConstMap(_data.data() + row * static_cast<std::size_t>(_dimension), _dimension);
    }

    template <typename Derived>
    void add(EntryId id, const Eigen::MatrixBase<Derived>& v)
    {
        if (v.size() != _dimension)
            throw DimensionMismatch(_dimension, v.size());
        if (!_ids.empty() && id <= _ids.back())
            throw Error("entry ids must be strictly increasing");
        const Vector dense = v;
        if (std::abs(dense.norm() - Scalar(1)) > unit_norm_tolerance<Scalar>())
            throw Error("vector for entry " + std::to_string(id) + " is not unit-norm");
        _ids.push_back(id);
        _data.insert(_data.end(), dense.data(), dense.data() + dense.size());
    }

    /// Descending score, ties by ascending id, at most k results.
    template <typename Derived>
    [[nodiscard]] std::vector<ScoredEntry<Scalar>> top_k(const Eigen::MatrixBase<Derived>& query,
                                                         std::size_t k,
                                                         const EntryFilter& filter = {}) const
    {
        if (k == 0)
            throw Error("top_k requires k >= 1");
        if (query.size() != _dimension)
            throw DimensionMismatch(_dimension, query.size());

        const Vector q = query;
        std::vector<ScoredEntry<Scalar>> scored;
        scored.reserve(_ids.size());
        for (std::size_t row = 0; row < _ids.size(); ++row)
        {
            if (filter && !filter(_ids[row]))
                continue;
            scored.push_back({_ids[row], vector(row).dot(q)});
        }

        auto ranked = [](const ScoredEntry<Scalar>& a, const ScoredEntry<Scalar>& b) {
            if (a.score != b.score)
                return a.score > b.score;
            return a.id < b.id;
        };
        const auto n = std::min(k, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), ranked);
        scored.resize(n);
        return scored;
    }

  private:
    int _dimension;
    std::vector<EntryId> _ids;
    std::vector<Scalar> _data;
};

template <typename Scalar, typename Derived>
auto top_k(const VectorIndex<Scalar>& index,
           const Eigen::MatrixBase<Derived>& query,
           std::size_t k,
           const EntryFilter& filter = {})
{
    return index.top_k(query, k, filter);
}

} // namespace hiplan
