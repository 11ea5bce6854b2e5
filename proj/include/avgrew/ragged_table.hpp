#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace avgrew {

/// Row layout of a ragged table: row s has counts[s] entries, stored
/// contiguously. Pair (s, a) maps to the flat index offset(s) + a.
class RaggedShape {
public:
    RaggedShape() = default;

    explicit RaggedShape(std::vector<std::size_t> counts) : counts_(std::move(counts)) {
        offsets_.resize(counts_.size() + 1, 0);
        std::partial_sum(counts_.begin(), counts_.end(), offsets_.begin() + 1);
    }

    std::size_t rows() const noexcept { return counts_.size(); }
    std::size_t row_size(std::size_t s) const { return counts_.at(s); }
    std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
    std::size_t offset(std::size_t s) const { return offsets_.at(s); }
    std::size_t index(std::size_t s, std::size_t a) const { return offsets_[s] + a; }
    const std::vector<std::size_t>& counts() const noexcept { return counts_; }

    bool contains(std::size_t s, std::size_t a) const noexcept {
        return s < counts_.size() && a < counts_[s];
    }

    /// Inverse of index(): the (row, column) pair of a flat index.
    std::pair<std::size_t, std::size_t> locate(std::size_t flat) const {
        if (flat >= size()) throw std::out_of_range("ragged index out of range");
        auto it = std::upper_bound(offsets_.begin(), offsets_.end(), flat);
        const auto s = static_cast<std::size_t>(it - offsets_.begin()) - 1;
        return {s, flat - offsets_[s]};
    }

    friend bool operator==(const RaggedShape&, const RaggedShape&) = default;

private:
    std::vector<std::size_t> counts_;
    std::vector<std::size_t> offsets_;
};

/// Table indexed by (state, action) with a per-state action count. Used for
/// action values, auxiliary estimator tables and policy probabilities.
template <typename T = double>
class RaggedTable {
public:
    RaggedTable() = default;
    explicit RaggedTable(RaggedShape shape, T fill = T{})
        : shape_(std::move(shape)), values_(shape_.size(), fill) {}

    const RaggedShape& shape() const noexcept { return shape_; }
    std::size_t rows() const noexcept { return shape_.rows(); }
    std::size_t size() const noexcept { return values_.size(); }

    T& operator()(std::size_t s, std::size_t a) { return values_[shape_.index(s, a)]; }
    const T& operator()(std::size_t s, std::size_t a) const { return values_[shape_.index(s, a)]; }

    std::span<T> row(std::size_t s) { return {values_.data() + shape_.offset(s), shape_.row_size(s)}; }
    std::span<const T> row(std::size_t s) const {
        return {values_.data() + shape_.offset(s), shape_.row_size(s)};
    }

    std::span<T> flat() noexcept { return values_; }
    std::span<const T> flat() const noexcept { return values_; }

    T sum() const { return std::accumulate(values_.begin(), values_.end(), T{}); }

    friend bool operator==(const RaggedTable&, const RaggedTable&) = default;

private:
    RaggedShape shape_;
    std::vector<T> values_;
};

using ActionValues = RaggedTable<double>;

}  // namespace avgrew
