#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gradescale/alignment.hpp"
#include "gradescale/rasch.hpp"
#include "gradescale/types.hpp"

namespace gradescale::report {

// One scored run of a partition under one prompt mode.
struct SessionSummary {
    Subject subject = Subject::Mathematics;
    Grade grade = Grade::G4;
    std::string mode;
    double theta = 0;
    bool at_boundary = false;
    double percentile = 0;
    std::size_t items = 0;
    std::size_t correct = 0;
    std::size_t rule_based = 0;
    std::size_t followups = 0;
    std::size_t failed = 0;
};

// Where a pick-an-option-at-random examinee lands on the same partition.
struct BaselineRow {
    Subject subject = Subject::Mathematics;
    Grade grade = Grade::G4;
    double theta = 0;
    bool at_boundary = false;
    double percentile = 0;
};

struct GradeVerdict {
    Grade grade = Grade::G4;
    alignment::RubricVerdict verdict;
};

// Aggregates for one subject across the grades in the run. Ordering,
// stability, and the rubric need all three grades; when the run covers
// fewer they are marked not evaluable instead of being guessed.
struct SubjectSummary {
    Subject subject = Subject::Mathematics;
    double avg_dev_u = 0;
    double avg_dev_e = 0;
    std::optional<alignment::OrderingResult> ordering_u;
    std::optional<alignment::OrderingResult> ordering_e;
    std::optional<bool> stability_ok;
    bool rubric_evaluable = false;
    std::string rubric_note;
    std::vector<GradeVerdict> rubric;
};

struct AlignmentReport {
    std::string examinee_id;
    std::string enforced_mode;
    double stability_threshold = alignment::kDefaultStabilityThreshold;
    std::vector<SessionSummary> sessions;
    std::vector<alignment::AlignmentCell> cells;
    std::vector<BaselineRow> baselines;
    std::vector<SubjectSummary> subjects;
};

// Fills the per-subject aggregate blocks from the cells. theta_e carries the
// enforced-mode ability estimate per (subject, grade), keyed by subject then
// grade, for banding.
inline void finalize_subject_summaries(AlignmentReport& rep,
                                       const std::map<Subject, std::map<Grade, double>>& theta_e) {
    rep.subjects.clear();
    for (Subject s : kAllSubjects) {
        std::vector<alignment::AlignmentCell> cells;
        for (const auto& c : rep.cells)
            if (c.subject == s) cells.push_back(c);
        if (cells.empty()) continue;

        SubjectSummary sum;
        sum.subject = s;
        sum.avg_dev_u = alignment::average_deviation(cells, alignment::PromptColumn::Unenforced);
        sum.avg_dev_e = alignment::average_deviation(cells, alignment::PromptColumn::Enforced);

        const bool all_grades = cells.size() == std::size(kAllGrades);
        if (!all_grades) {
            sum.rubric_note = "run covers fewer than three grades";
            rep.subjects.push_back(std::move(sum));
            continue;
        }
        std::map<Grade, double> p_u, p_e;
        std::vector<double> dev_e;
        for (const auto& c : cells) {
            p_u[c.grade] = c.p_u;
            p_e[c.grade] = c.p_e;
            dev_e.push_back(c.dev_e);
        }
        sum.ordering_u = alignment::developmental_ordering(p_u);
        sum.ordering_e = alignment::developmental_ordering(p_e);
        sum.stability_ok = alignment::prompt_stability(dev_e, rep.stability_threshold);
        sum.rubric_evaluable = true;
        for (const auto& c : cells) {
            GradeVerdict v;
            v.grade = c.grade;
            v.verdict = alignment::make_verdict(alignment::band_of(theta_e.at(s).at(c.grade)),
                                                sum.ordering_e->ok, *sum.stability_ok);
            sum.rubric.push_back(v);
        }
        rep.subjects.push_back(std::move(sum));
    }
}

inline nlohmann::ordered_json report_to_json(const AlignmentReport& rep) {
    nlohmann::ordered_json doc;
    doc["examinee_id"] = rep.examinee_id;
    doc["enforced_mode"] = rep.enforced_mode;
    doc["stability_threshold"] = rep.stability_threshold;

    doc["sessions"] = nlohmann::ordered_json::array();
    for (const auto& s : rep.sessions) {
        nlohmann::ordered_json j;
        j["subject"] = to_string(s.subject);
        j["grade"] = grade_level(s.grade);
        j["mode"] = s.mode;
        j["theta"] = s.theta;
        j["at_boundary"] = s.at_boundary;
        j["percentile"] = s.percentile;
        j["items"] = s.items;
        j["correct"] = s.correct;
        j["rule_based"] = s.rule_based;
        j["followups"] = s.followups;
        j["failed"] = s.failed;
        doc["sessions"].push_back(std::move(j));
    }

    doc["cells"] = nlohmann::ordered_json::array();
    for (const auto& c : rep.cells) {
        nlohmann::ordered_json j;
        j["examinee_id"] = c.examinee_id;
        j["subject"] = to_string(c.subject);
        j["grade"] = grade_level(c.grade);
        j["p_u"] = c.p_u;
        j["p_e"] = c.p_e;
        j["delta"] = c.delta;
        j["dev_u"] = c.dev_u;
        j["dev_e"] = c.dev_e;
        doc["cells"].push_back(std::move(j));
    }

    doc["baselines"] = nlohmann::ordered_json::array();
    for (const auto& b : rep.baselines) {
        nlohmann::ordered_json j;
        j["subject"] = to_string(b.subject);
        j["grade"] = grade_level(b.grade);
        j["theta"] = b.theta;
        j["at_boundary"] = b.at_boundary;
        j["percentile"] = b.percentile;
        doc["baselines"].push_back(std::move(j));
    }

    doc["subjects"] = nlohmann::ordered_json::array();
    for (const auto& s : rep.subjects) {
        nlohmann::ordered_json j;
        j["subject"] = to_string(s.subject);
        j["avg_dev_u"] = s.avg_dev_u;
        j["avg_dev_e"] = s.avg_dev_e;
        if (s.ordering_u) {
            j["ordering_u"] = {{"ok", s.ordering_u->ok}, {"detail", s.ordering_u->detail}};
            j["ordering_e"] = {{"ok", s.ordering_e->ok}, {"detail", s.ordering_e->detail}};
        } else {
            j["ordering_u"] = nullptr;
            j["ordering_e"] = nullptr;
        }
        if (s.stability_ok) j["stability_ok"] = *s.stability_ok;
        else j["stability_ok"] = nullptr;
        j["rubric"]["evaluable"] = s.rubric_evaluable;
        j["rubric"]["note"] = s.rubric_note;
        j["rubric"]["grades"] = nlohmann::ordered_json::array();
        for (const auto& v : s.rubric) {
            nlohmann::ordered_json g;
            g["grade"] = grade_level(v.grade);
            g["band"] = alignment::to_string(v.verdict.band);
            g["ordering_ok"] = v.verdict.ordering_ok;
            g["stability_ok"] = v.verdict.stability_ok;
            g["overall"] = v.verdict.overall;
            j["rubric"]["grades"].push_back(std::move(g));
        }
        doc["subjects"].push_back(std::move(j));
    }
    return doc;
}

inline AlignmentReport report_from_json(const nlohmann::json& doc) {
    AlignmentReport rep;
    rep.examinee_id = doc.at("examinee_id").get<std::string>();
    rep.enforced_mode = doc.at("enforced_mode").get<std::string>();
    rep.stability_threshold = doc.at("stability_threshold").get<double>();
    for (const auto& j : doc.at("sessions")) {
        SessionSummary s;
        s.subject = parse_subject(j.at("subject").get<std::string>());
        s.grade = parse_grade(j.at("grade").get<int>());
        s.mode = j.at("mode").get<std::string>();
        s.theta = j.at("theta").get<double>();
        s.at_boundary = j.at("at_boundary").get<bool>();
        s.percentile = j.at("percentile").get<double>();
        s.items = j.at("items").get<std::size_t>();
        s.correct = j.at("correct").get<std::size_t>();
        s.rule_based = j.at("rule_based").get<std::size_t>();
        s.followups = j.at("followups").get<std::size_t>();
        s.failed = j.at("failed").get<std::size_t>();
        rep.sessions.push_back(std::move(s));
    }
    for (const auto& j : doc.at("cells")) {
        auto c = alignment::make_cell(j.at("examinee_id").get<std::string>(),
                                      parse_subject(j.at("subject").get<std::string>()),
                                      parse_grade(j.at("grade").get<int>()),
                                      j.at("p_u").get<double>(), j.at("p_e").get<double>());
        rep.cells.push_back(std::move(c));
    }
    for (const auto& j : doc.at("baselines")) {
        BaselineRow b;
        b.subject = parse_subject(j.at("subject").get<std::string>());
        b.grade = parse_grade(j.at("grade").get<int>());
        b.theta = j.at("theta").get<double>();
        b.at_boundary = j.at("at_boundary").get<bool>();
        b.percentile = j.at("percentile").get<double>();
        rep.baselines.push_back(std::move(b));
    }
    for (const auto& j : doc.at("subjects")) {
        SubjectSummary s;
        s.subject = parse_subject(j.at("subject").get<std::string>());
        s.avg_dev_u = j.at("avg_dev_u").get<double>();
        s.avg_dev_e = j.at("avg_dev_e").get<double>();
        if (!j.at("ordering_u").is_null()) {
            s.ordering_u = alignment::OrderingResult{j["ordering_u"].at("ok").get<bool>(),
                                                     j["ordering_u"].at("detail").get<std::string>()};
            s.ordering_e = alignment::OrderingResult{j["ordering_e"].at("ok").get<bool>(),
                                                     j["ordering_e"].at("detail").get<std::string>()};
        }
        if (!j.at("stability_ok").is_null()) s.stability_ok = j.at("stability_ok").get<bool>();
        s.rubric_evaluable = j.at("rubric").at("evaluable").get<bool>();
        s.rubric_note = j.at("rubric").at("note").get<std::string>();
        for (const auto& g : j.at("rubric").at("grades")) {
            GradeVerdict v;
            v.grade = parse_grade(g.at("grade").get<int>());
            const std::string band = g.at("band").get<std::string>();
            for (auto b : {alignment::Band::Core, alignment::Band::Extended,
                           alignment::Band::Marginal, alignment::Band::Outlier})
                if (alignment::to_string(b) == band) v.verdict.band = b;
            v.verdict.ordering_ok = g.at("ordering_ok").get<bool>();
            v.verdict.stability_ok = g.at("stability_ok").get<bool>();
            v.verdict.overall = g.at("overall").get<bool>();
            s.rubric.push_back(std::move(v));
        }
        rep.subjects.push_back(std::move(s));
    }
    return rep;
}

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

}  // namespace detail

// Flat spreadsheet export: alignment cells plus baseline rows. Baseline rows
// carry their percentile in the p_u column and leave the enforced columns
// empty.
inline std::string report_to_csv(const AlignmentReport& rep) {
    std::string out = "row_kind,examinee_id,subject,grade,p_u,p_e,delta,dev_u,dev_e\n";
    char buf[160];
    for (const auto& c : rep.cells) {
        std::snprintf(buf, sizeof buf, "cell,%s,%s,%d,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                      c.examinee_id.c_str(), to_string(c.subject).c_str(), grade_level(c.grade),
                      c.p_u, c.p_e, c.delta, c.dev_u, c.dev_e);
        out += buf;
    }
    for (const auto& b : rep.baselines) {
        std::snprintf(buf, sizeof buf, "baseline,random_choice,%s,%d,%.6f,,,%.6f,\n",
                      to_string(b.subject).c_str(), grade_level(b.grade), b.percentile,
                      std::fabs(b.percentile - 50.0));
        out += buf;
    }
    return out;
}

// Human-readable rendering for the terminal.
inline std::string render_table(const AlignmentReport& rep) {
    std::string out;
    out += "examinee: " + rep.examinee_id + "\n";
    out += "enforced mode: " + rep.enforced_mode + "\n";
    for (const auto& s : rep.subjects) {
        out += "\n" + to_string(s.subject) + "\n";
        out += "  grade     P_U     P_E   delta   dev_U   dev_E\n";
        for (const auto& c : rep.cells) {
            if (c.subject != s.subject) continue;
            char buf[96];
            std::snprintf(buf, sizeof buf, "  %5d %7s %7s %7s %7s %7s\n", grade_level(c.grade),
                          detail::fmt(c.p_u).c_str(), detail::fmt(c.p_e).c_str(),
                          detail::fmt(c.delta).c_str(), detail::fmt(c.dev_u).c_str(),
                          detail::fmt(c.dev_e).c_str());
            out += buf;
        }
        for (const auto& b : rep.baselines) {
            if (b.subject != s.subject) continue;
            out += "  random choice, grade " + gradescale::to_string(b.grade) + ": percentile " +
                   detail::fmt(b.percentile) + "\n";
        }
        out += "  avg deviation: U " + detail::fmt(s.avg_dev_u) + ", E " +
               detail::fmt(s.avg_dev_e) + "\n";
        if (s.ordering_e)
            out += std::string("  developmental ordering (enforced): ") +
                   (s.ordering_e->ok ? "ok" : ("violated: " + s.ordering_e->detail)) + "\n";
        if (s.stability_ok)
            out += std::string("  prompt stability: ") + (*s.stability_ok ? "ok" : "unstable") +
                   "\n";
        if (s.rubric_evaluable) {
            for (const auto& v : s.rubric) {
                out += "  grade " + gradescale::to_string(v.grade) + " verdict: band " +
                       alignment::to_string(v.verdict.band) + ", " +
                       (v.verdict.overall ? "viable proxy" : "not a viable proxy") + "\n";
            }
        } else {
            out += "  rubric not evaluable: " + s.rubric_note + "\n";
        }
    }
    return out;
}

}  // namespace gradescale::report
