#pragma once

// Residual bookkeeping and fitted scalar constants.
//
// Identity residuals are measured as |residual| / (1 + scale), where scale is
// the largest magnitude among the terms entering the identity.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace kqbh {

struct Residual {
    double value = 0.0;
    double scale = 0.0;

    double relative() const { return std::abs(value) / (1.0 + std::abs(scale)); }
};

inline double max_abs(std::span<const double> xs) {
    double m = 0.0;
    for (double x : xs) m = std::max(m, std::abs(x));
    return m;
}

/// Running maximum of relative residuals.
class ResidualStats {
public:
    void add(const Residual& r) {
        ++count_;
        max_relative_ = std::max(max_relative_, r.relative());
        max_absolute_ = std::max(max_absolute_, std::abs(r.value));
    }
    void add_relative(double rel) {
        ++count_;
        max_relative_ = std::max(max_relative_, rel);
        max_absolute_ = std::max(max_absolute_, rel);
    }
    void merge(const ResidualStats& o) {
        count_ += o.count_;
        max_relative_ = std::max(max_relative_, o.max_relative_);
        max_absolute_ = std::max(max_absolute_, o.max_absolute_);
    }

    std::size_t count() const { return count_; }
    double max_relative() const { return max_relative_; }
    double max_absolute() const { return max_absolute_; }

private:
    std::size_t count_ = 0;
    double max_relative_ = 0.0;
    double max_absolute_ = 0.0;
};

/// Fits a single real constant c with lhs ~= c * rhs over many points.
///
/// Each point contributes a vector pair; the per-point least-squares factor
/// <lhs, rhs> / <rhs, rhs> is recorded, and the global factor is their mean.
/// Points where |rhs| is negligible against the scale do not vote but are
/// still included in the post-fit residual.
class FactorFit {
public:
    struct Result {
        double factor = std::numeric_limits<double>::quiet_NaN();
        double spread = 0.0;             ///< (max - min) / |factor| over voting points
        double max_residual = 0.0;       ///< post-fit, relative
        std::size_t points = 0;
        std::size_t voting_points = 0;
        bool all_zero = false;           ///< lhs and rhs negligible everywhere

        bool consistent(double rel_spread = 1e-6) const {
            return voting_points > 0 && std::isfinite(factor) && spread <= rel_spread;
        }
        bool near(double target, double tol = 1e-6) const {
            return std::isfinite(factor) && std::abs(factor - target) <= tol * std::max(1.0, std::abs(target));
        }
    };

    explicit FactorFit(double vote_threshold = 1e-8) : vote_threshold_(vote_threshold) {}

    void add(std::span<const double> lhs, std::span<const double> rhs, double scale) {
        Sample s{std::vector<double>(lhs.begin(), lhs.end()), std::vector<double>(rhs.begin(), rhs.end()),
                 std::max({scale, max_abs(lhs), max_abs(rhs)})};
        double lr = 0.0;
        double rr = 0.0;
        for (std::size_t i = 0; i < lhs.size(); ++i) {
            lr += lhs[i] * rhs[i];
            rr += rhs[i] * rhs[i];
        }
        if (std::sqrt(rr) > vote_threshold_ * (1.0 + s.scale)) ratios_.push_back(lr / rr);
        samples_.push_back(std::move(s));
    }

    void add(double lhs, double rhs, double scale = 0.0) {
        add(std::span<const double>(&lhs, 1), std::span<const double>(&rhs, 1), scale);
    }

    void add(std::complex<double> lhs, std::complex<double> rhs, double scale = 0.0) {
        const double l[2] = {lhs.real(), lhs.imag()};
        const double r[2] = {rhs.real(), rhs.imag()};
        add(std::span<const double>(l), std::span<const double>(r), scale);
    }

    Result finish() const {
        Result res;
        res.points = samples_.size();
        res.voting_points = ratios_.size();
        if (ratios_.empty()) {
            res.all_zero = true;
            res.factor = std::numeric_limits<double>::quiet_NaN();
            for (const auto& s : samples_) res.max_residual = std::max(res.max_residual, max_abs(s.lhs) / (1.0 + s.scale));
            return res;
        }
        double sum = 0.0;
        double lo = ratios_.front();
        double hi = ratios_.front();
        for (double r : ratios_) {
            sum += r;
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        res.factor = sum / static_cast<double>(ratios_.size());
        res.spread = (hi - lo) / std::max(std::abs(res.factor), std::numeric_limits<double>::min());
        for (const auto& s : samples_) {
            double worst = 0.0;
            for (std::size_t i = 0; i < s.lhs.size(); ++i) {
                worst = std::max(worst, std::abs(s.lhs[i] - res.factor * s.rhs[i]));
            }
            res.max_residual = std::max(res.max_residual, worst / (1.0 + s.scale));
        }
        return res;
    }

private:
    struct Sample {
        std::vector<double> lhs;
        std::vector<double> rhs;
        double scale;
    };

    double vote_threshold_;
    std::vector<Sample> samples_;
    std::vector<double> ratios_;
};

/// Outcome of comparing a printed closed form with the computed quantity.
enum class PrintedStatus { match, sign, factor, mismatch };

inline std::string to_string(PrintedStatus s) {
    switch (s) {
        case PrintedStatus::match: return "match";
        case PrintedStatus::sign: return "sign";
        case PrintedStatus::factor: return "factor";
        case PrintedStatus::mismatch: return "mismatch";
    }
    return "mismatch";
}

/// Classifies printed ~= c * computed. `tol` bounds the post-fit residual.
inline PrintedStatus classify(const FactorFit::Result& r, double tol) {
    if (r.all_zero) return r.max_residual <= tol ? PrintedStatus::match : PrintedStatus::mismatch;
    if (!r.consistent() || r.max_residual > tol) return PrintedStatus::mismatch;
    if (r.near(1.0)) return PrintedStatus::match;
    if (r.near(-1.0)) return PrintedStatus::sign;
    return PrintedStatus::factor;
}

}  // namespace kqbh
