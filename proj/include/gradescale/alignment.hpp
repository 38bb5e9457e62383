#pragma once

#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gradescale/rasch.hpp"
#include "gradescale/stats.hpp"
#include "gradescale/types.hpp"

namespace gradescale::alignment {

// |theta| bands for judging a proxy against the average student. Core and
// Extended are the acceptable ones; Marginal fills the otherwise unnamed gap
// below the Outlier cutoff.
enum class Band { Core, Extended, Marginal, Outlier };

inline std::string to_string(Band b) {
    switch (b) {
        case Band::Core: return "core";
        case Band::Extended: return "extended";
        case Band::Marginal: return "marginal";
        case Band::Outlier: return "outlier";
    }
    throw std::logic_error("bad Band");
}

inline Band band_of(double theta) {
    if (!std::isfinite(theta)) throw std::domain_error("band_of: theta must be finite");
    const double a = std::fabs(theta);
    if (a <= 1.0) return Band::Core;
    if (a <= 1.5) return Band::Extended;
    if (a < 2.0) return Band::Marginal;
    return Band::Outlier;
}

inline Band band_of(const rasch::Ability& a) { return band_of(a.value); }

// Percentile images of the logit edges 1, 1.5, 2 under the standard-normal
// CDF; the upper ends of Core, Extended, and Marginal respectively.
struct BandEdges {
    double core_hi;
    double extended_hi;
    double marginal_hi;
};

inline BandEdges percentile_band_edges() {
    return {rasch::percentile_rank(1.0), rasch::percentile_rank(1.5), rasch::percentile_rank(2.0)};
}

// One examinee's standing on one (subject, grade) partition under both
// prompt regimes.
struct AlignmentCell {
    std::string examinee_id;
    Subject subject = Subject::Mathematics;
    Grade grade = Grade::G4;
    double p_u = 0;
    double p_e = 0;
    double delta = 0;
    double dev_u = 0;
    double dev_e = 0;
};

inline AlignmentCell make_cell(std::string examinee_id, Subject subject, Grade grade, double p_u,
                               double p_e) {
    if (!(p_u > 0.0 && p_u < 100.0 && p_e > 0.0 && p_e < 100.0))
        throw std::invalid_argument("make_cell: percentiles must lie in (0, 100)");
    AlignmentCell c;
    c.examinee_id = std::move(examinee_id);
    c.subject = subject;
    c.grade = grade;
    c.p_u = p_u;
    c.p_e = p_e;
    c.delta = p_e - p_u;
    c.dev_u = std::fabs(p_u - 50.0);
    c.dev_e = std::fabs(p_e - 50.0);
    return c;
}

struct OrderingResult {
    bool ok = false;
    std::string detail;
};

// True iff ability rises strictly grade 4 -> 8 -> 12. Works on any strictly
// monotone stand-in for theta; percentiles qualify since the normal CDF is
// increasing.
inline OrderingResult developmental_ordering(const std::map<Grade, double>& by_grade) {
    for (Grade g : kAllGrades)
        if (!by_grade.count(g))
            throw std::invalid_argument("developmental_ordering: missing grade " +
                                        gradescale::to_string(g));
    OrderingResult out;
    out.ok = true;
    const Grade pairs[][2] = {{Grade::G4, Grade::G8}, {Grade::G8, Grade::G12}};
    for (const auto& pair : pairs) {
        if (by_grade.at(pair[0]) < by_grade.at(pair[1])) continue;
        out.ok = false;
        if (!out.detail.empty()) out.detail += "; ";
        out.detail += "grade " + gradescale::to_string(pair[0]) + " is not below grade " +
                      gradescale::to_string(pair[1]);
    }
    return out;
}

inline OrderingResult developmental_ordering(const std::map<Grade, rasch::Ability>& by_grade) {
    std::map<Grade, double> values;
    for (const auto& [g, a] : by_grade) values[g] = a.value;
    return developmental_ordering(values);
}

inline constexpr double kDefaultStabilityThreshold = 15.0;

// True iff the enforced deviations are within `threshold` percentile points
// of each other across grades, inclusive.
inline bool prompt_stability(std::span<const double> dev_e_by_grade,
                             double threshold = kDefaultStabilityThreshold) {
    if (dev_e_by_grade.size() < 2)
        throw std::invalid_argument("prompt_stability: need at least two grades");
    double lo = dev_e_by_grade[0], hi = dev_e_by_grade[0];
    for (double d : dev_e_by_grade) {
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return hi - lo <= threshold;
}

inline double average_deviation(std::span<const double> percentiles) {
    if (percentiles.empty()) throw std::invalid_argument("average_deviation: empty input");
    double sum = 0.0;
    for (double p : percentiles) sum += std::fabs(p - 50.0);
    return sum / static_cast<double>(percentiles.size());
}

enum class PromptColumn { Unenforced, Enforced };

inline double average_deviation(std::span<const AlignmentCell> cells, PromptColumn column) {
    if (cells.empty()) throw std::invalid_argument("average_deviation: empty input");
    double sum = 0.0;
    for (const auto& c : cells) sum += column == PromptColumn::Unenforced ? c.dev_u : c.dev_e;
    return sum / static_cast<double>(cells.size());
}

struct RubricVerdict {
    Band band = Band::Outlier;
    bool ordering_ok = false;
    bool stability_ok = false;
    bool overall = false;
};

inline RubricVerdict make_verdict(Band band, bool ordering_ok, bool stability_ok) {
    RubricVerdict v;
    v.band = band;
    v.ordering_ok = ordering_ok;
    v.stability_ok = stability_ok;
    v.overall =
        (band == Band::Core || band == Band::Extended) && ordering_ok && stability_ok;
    return v;
}

}  // namespace gradescale::alignment
