#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gradescale/stats.hpp"

namespace gradescale::rasch {

// Item difficulty on the logit scale, b = log((1-p)/p).
struct Difficulty {
    double value = 0.0;
};

// Estimated ability is searched over [-kThetaMax, +kThetaMax]; a perfect or
// zero score has no interior maximum and returns the bound with
// at_boundary set.
inline constexpr double kThetaMax = 6.0;

struct Ability {
    double value = 0.0;
    bool at_boundary = false;
};

struct ScoredResponse {
    std::string item_id;
    bool correct = false;
};

// Dichotomous responses aligned, element for element, with a difficulty list.
using ResponseVector = std::vector<ScoredResponse>;

// Correct-rates are clamped away from 0 and 1 so the difficulty transform
// stays finite on rounded population percentages.
inline constexpr double kRateEpsilon = 1e-4;

inline double clamp_proportion(double p) {
    if (p < kRateEpsilon) return kRateEpsilon;
    if (p > 1.0 - kRateEpsilon) return 1.0 - kRateEpsilon;
    return p;
}

// b = log((1-p)/p); strictly decreasing in p, zero at p = 0.5.
inline Difficulty item_difficulty(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("item_difficulty: p must be in (0,1)");
    return Difficulty{std::log((1.0 - p) / p)};
}

// P(correct) = logistic(theta - b), evaluated in the overflow-safe form.
inline double response_probability(double theta, Difficulty b) {
    const double x = theta - b.value;
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double response_probability(const Ability& theta, Difficulty b) {
    return response_probability(theta.value, b);
}

namespace detail {

// log(logistic(x)) without intermediate underflow.
inline double log_logistic(double x) {
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

inline void check_aligned(const ResponseVector& responses, std::span<const Difficulty> difficulties) {
    if (responses.empty()) throw std::invalid_argument("rasch: empty response vector");
    if (responses.size() != difficulties.size())
        throw std::invalid_argument("rasch: responses and difficulties differ in length (" +
                                    std::to_string(responses.size()) + " vs " +
                                    std::to_string(difficulties.size()) + ")");
}

}  // namespace detail

// Sum over items of s*log P + (1-s)*log(1-P); always <= 0.
inline double log_likelihood(double theta, const ResponseVector& responses,
                             std::span<const Difficulty> difficulties) {
    detail::check_aligned(responses, difficulties);
    double ll = 0.0;
    for (std::size_t j = 0; j < responses.size(); ++j) {
        const double x = theta - difficulties[j].value;
        ll += responses[j].correct ? detail::log_logistic(x) : detail::log_logistic(-x);
    }
    return ll;
}

// Score function S(theta) = sum_j (s_j - P_j(theta)); strictly decreasing in
// theta, so the likelihood's interior maximum is its unique root.
inline double score(double theta, const ResponseVector& responses,
                    std::span<const Difficulty> difficulties) {
    detail::check_aligned(responses, difficulties);
    double s = 0.0;
    for (std::size_t j = 0; j < responses.size(); ++j)
        s += (responses[j].correct ? 1.0 : 0.0) - response_probability(theta, difficulties[j]);
    return s;
}

// MLE of ability by bisection on the score function over [-kThetaMax,
// kThetaMax]. The bracket is shrunk to 1e-9, far inside the 1e-6 contract,
// which also keeps |S(theta*)| below 1e-5 for any realistic item count.
// All-correct and all-incorrect response patterns, and patterns whose root
// lies outside the bracket, return the clamped bound with at_boundary = true.
inline Ability estimate_ability(const ResponseVector& responses,
                                std::span<const Difficulty> difficulties) {
    detail::check_aligned(responses, difficulties);

    std::size_t n_correct = 0;
    for (const auto& r : responses) n_correct += r.correct ? 1 : 0;
    if (n_correct == 0) return Ability{-kThetaMax, true};
    if (n_correct == responses.size()) return Ability{kThetaMax, true};

    double lo = -kThetaMax;
    double hi = kThetaMax;
    if (score(lo, responses, difficulties) <= 0.0) return Ability{-kThetaMax, true};
    if (score(hi, responses, difficulties) >= 0.0) return Ability{kThetaMax, true};

    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        if (score(mid, responses, difficulties) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return Ability{0.5 * (lo + hi), false};
}

// Percentile rank against the standard-normal population, Phi(theta) * 100.
inline double percentile_rank(double theta) {
    if (!std::isfinite(theta)) throw std::domain_error("percentile_rank: non-finite theta");
    return stats::normal_cdf(theta) * 100.0;
}

inline double percentile_rank(const Ability& theta) { return percentile_rank(theta.value); }

}  // namespace gradescale::rasch
