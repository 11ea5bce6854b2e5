#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace avgrew {

/// Grid tile coder with uniformly offset tilings: tiling i is displaced by
/// i / tilings of a tile width in every dimension. Inputs are clipped to the
/// bounds; the last tile of a displaced tiling absorbs the overhang.
class TileCoder {
public:
    TileCoder(std::size_t tilings, std::vector<std::size_t> tiles_per_dim,
              std::vector<std::pair<double, double>> bounds)
        : tilings_(tilings), tiles_(std::move(tiles_per_dim)), bounds_(std::move(bounds)) {
        if (tilings_ == 0) throw std::invalid_argument("need at least one tiling");
        if (tiles_.empty() || tiles_.size() != bounds_.size()) throw std::invalid_argument("tile spec mismatch");
        tiles_per_tiling_ = 1;
        for (std::size_t d = 0; d < tiles_.size(); ++d) {
            if (tiles_[d] == 0) throw std::invalid_argument("need at least one tile per dimension");
            if (!(bounds_[d].second > bounds_[d].first)) throw std::invalid_argument("empty bounds");
            tiles_per_tiling_ *= tiles_[d];
        }
    }

    std::size_t dims() const noexcept { return tiles_.size(); }
    std::size_t tilings() const noexcept { return tilings_; }
    std::size_t num_features() const noexcept { return tilings_ * tiles_per_tiling_; }

    /// Active feature indices, one per tiling, ascending.
    std::vector<std::size_t> encode(std::span<const double> x) const {
        if (x.size() != dims()) throw std::invalid_argument("tile coder input dimension mismatch");
        std::vector<std::size_t> active(tilings_);
        for (std::size_t i = 0; i < tilings_; ++i) {
            const double shift = static_cast<double>(i) / static_cast<double>(tilings_);
            std::size_t flat = 0;
            for (std::size_t d = 0; d < dims(); ++d) {
                const auto [lo, hi] = bounds_[d];
                const double unit = (std::clamp(x[d], lo, hi) - lo) / (hi - lo);
                auto coord = static_cast<std::size_t>(std::floor(unit * static_cast<double>(tiles_[d]) + shift));
                coord = std::min(coord, tiles_[d] - 1);
                flat = flat * tiles_[d] + coord;
            }
            active[i] = i * tiles_per_tiling_ + flat;
        }
        return active;
    }

private:
    std::size_t tilings_;
    std::vector<std::size_t> tiles_;
    std::vector<std::pair<double, double>> bounds_;
    std::size_t tiles_per_tiling_ = 1;
};

}  // namespace avgrew
