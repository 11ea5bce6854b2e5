#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace avgrew {

/// Step-size sequence consumed one value per update.
///
/// - constant:        alpha0 every step
/// - exp_decay:       alpha0 * factor^t, t = number of updates so far
/// - per_pair_count:  alpha0 / n^exponent, n = visits of the updated entry
///                    (including the current one)
///
/// The per-pair-count form with exponent in (0.5, 1] has unbounded partial
/// sums and summable squares for every entry.
class StepSizeSchedule {
public:
    enum class Kind { constant, exp_decay, per_pair_count };

    static StepSizeSchedule constant(double alpha0) { return {Kind::constant, alpha0, 1.0, 1.0}; }
    static StepSizeSchedule exp_decay(double alpha0, double factor) {
        if (!(factor > 0.0 && factor <= 1.0)) throw std::invalid_argument("decay factor must be in (0, 1]");
        return {Kind::exp_decay, alpha0, factor, 1.0};
    }
    static StepSizeSchedule per_pair_count(double alpha0, double exponent) {
        if (!(exponent > 0.0)) throw std::invalid_argument("count exponent must be positive");
        return {Kind::per_pair_count, alpha0, 1.0, exponent};
    }

    Kind kind() const noexcept { return kind_; }
    double initial() const noexcept { return alpha0_; }
    double factor() const noexcept { return factor_; }
    double exponent() const noexcept { return exponent_; }

    /// Step size for an update of table entry `entry`; advances the schedule.
    double next(std::size_t entry) {
        switch (kind_) {
            case Kind::constant:
                return alpha0_;
            case Kind::exp_decay: {
                const double a = current_;
                current_ *= factor_;
                return a;
            }
            case Kind::per_pair_count: {
                if (entry >= counts_.size()) counts_.resize(entry + 1, 0);
                const auto n = ++counts_[entry];
                return exponent_ == 1.0 ? alpha0_ / static_cast<double>(n)
                                        : alpha0_ / std::pow(static_cast<double>(n), exponent_);
            }
        }
        return alpha0_;
    }

    /// Step size the next call to next(entry) would return, without advancing.
    double peek(std::size_t entry) const {
        switch (kind_) {
            case Kind::constant: return alpha0_;
            case Kind::exp_decay: return current_;
            case Kind::per_pair_count: {
                const auto n = (entry < counts_.size() ? counts_[entry] : 0) + 1;
                return alpha0_ / std::pow(static_cast<double>(n), exponent_);
            }
        }
        return alpha0_;
    }

    std::size_t visits(std::size_t entry) const { return entry < counts_.size() ? counts_[entry] : 0; }

private:
    StepSizeSchedule(Kind kind, double alpha0, double factor, double exponent)
        : kind_(kind), alpha0_(alpha0), factor_(factor), exponent_(exponent), current_(alpha0) {
        if (!(alpha0 > 0.0)) throw std::invalid_argument("initial step size must be positive");
    }

    Kind kind_;
    double alpha0_;
    double factor_;
    double exponent_;
    double current_;
    std::vector<std::size_t> counts_;
};

}  // namespace avgrew
