#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gradescale/alignment.hpp"
#include "gradescale/backend.hpp"
#include "gradescale/cohort.hpp"
#include "gradescale/harness.hpp"
#include "gradescale/io.hpp"
#include "gradescale/item_bank.hpp"
#include "gradescale/prompts.hpp"
#include "gradescale/rasch.hpp"
#include "gradescale/report.hpp"
#include "gradescale/stats.hpp"
#include "gradescale/types.hpp"

namespace gradescale::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitBackend = 3;

class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string bank;
    std::string subject;
    std::vector<int> grades{4, 8, 12};
    std::string mode = "grade_enforced_minimal";
    std::string backend;
    std::string endpoint;
    std::uint64_t seed = 0;
    std::string out;
    double stability_threshold = alignment::kDefaultStabilityThreshold;
    bool permissive = false;
    bool replay = false;
};

inline nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["bank"] = cfg.bank;
    j["subject"] = cfg.subject;
    j["grades"] = cfg.grades;
    j["mode"] = cfg.mode;
    j["backend"] = cfg.backend;
    j["endpoint"] = cfg.endpoint;
    j["seed"] = cfg.seed;
    j["out"] = cfg.out;
    j["stability_threshold"] = cfg.stability_threshold;
    j["permissive"] = cfg.permissive;
    j["replay"] = cfg.replay;
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    cfg.bank = j.at("bank").get<std::string>();
    cfg.subject = j.at("subject").get<std::string>();
    cfg.grades = j.at("grades").get<std::vector<int>>();
    cfg.mode = j.at("mode").get<std::string>();
    cfg.backend = j.at("backend").get<std::string>();
    cfg.endpoint = j.at("endpoint").get<std::string>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.out = j.at("out").get<std::string>();
    cfg.stability_threshold = j.at("stability_threshold").get<double>();
    cfg.permissive = j.at("permissive").get<bool>();
    cfg.replay = j.at("replay").get<bool>();
    return cfg;
}

namespace detail {

inline std::string subject_slug(Subject s) {
    return s == Subject::Mathematics ? "mathematics" : "reading";
}

inline std::filesystem::path default_prompt_dir() {
    if (const char* env = std::getenv("GRADESCALE_PROMPT_DIR"); env && *env) return env;
#ifdef GRADESCALE_DEFAULT_PROMPT_DIR
    return GRADESCALE_DEFAULT_PROMPT_DIR;
#else
    return "assets/prompts";
#endif
}

inline ItemBank load_bank_checked(const std::string& path, bool permissive, std::ostream& err) {
    LoadOptions opts;
    opts.permissive = permissive;
    LoadReport report;
    auto bank = load_bank(path, opts, &report);
    for (const auto& d : report.rejected)
        err << "skipped item " << d.item_id << ": " << d.rule << ": " << d.message << "\n";
    return bank;
}

inline std::vector<rasch::Difficulty> partition_difficulties(const std::vector<Item>& items) {
    std::vector<rasch::Difficulty> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(rasch::item_difficulty(correct_rate(item)));
    return out;
}

inline std::map<std::string, double> bank_difficulty_map(const ItemBank& bank) {
    std::map<std::string, double> out;
    for (const auto& item : bank.items())
        out[item.id] = rasch::item_difficulty(correct_rate(item)).value;
    return out;
}

inline std::unique_ptr<backend::ExamineeBackend> make_backend(const RunConfig& cfg,
                                                              const ItemBank& bank) {
    const std::string& spec = cfg.backend;
    if (spec == "mock-correct") return std::make_unique<backend::AlwaysCorrectMock>();
    if (spec == "mock-random") return std::make_unique<backend::UniformRandomMock>();
    if (spec == "mock-rasch" || spec.rfind("mock-rasch=", 0) == 0) {
        double theta = 0.0;
        if (const auto eq = spec.find('='); eq != std::string::npos) {
            try {
                theta = std::stod(spec.substr(eq + 1));
            } catch (const std::exception&) {
                throw UsageError("bad mock-rasch ability: " + spec);
            }
        }
        return std::make_unique<backend::RaschStudentMock>(theta, bank_difficulty_map(bank));
    }
    if (spec.rfind("scripted=", 0) == 0) {
        const auto path = spec.substr(9);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(io::read_file(path));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("malformed script file: ") + e.what());
        }
        std::map<std::string, std::string> table;
        for (const auto& [key, value] : doc.items()) table[key] = value.get<std::string>();
        return std::make_unique<backend::ScriptedMock>(std::move(table));
    }
    if (spec == "remote") {
        if (cfg.endpoint.empty()) throw UsageError("remote backend needs --endpoint");
        backend::RemoteConfig rc;
        rc.endpoint = cfg.endpoint;
        return std::make_unique<backend::RemoteLLMBackend>(rc);
    }
    throw UsageError("unknown backend: " + spec +
                     " (expected mock-correct, mock-random, mock-rasch[=theta], "
                     "scripted=<file>, or remote)");
}

inline std::uint64_t session_seed(std::uint64_t seed, const std::string& key) {
    return sim::substream_seed(seed, sim::hash_str(key));
}

inline std::string grade_tag(Subject s, int grade) {
    return subject_slug(s) + "_g" + std::to_string(grade);
}

inline report::SessionSummary summarize(Subject subject, Grade grade, const std::string& mode,
                                        const harness::SessionResult& session,
                                        const rasch::Ability& theta) {
    report::SessionSummary s;
    s.subject = subject;
    s.grade = grade;
    s.mode = mode;
    s.theta = theta.value;
    s.at_boundary = theta.at_boundary;
    s.percentile = rasch::percentile_rank(theta);
    s.items = session.row.size();
    for (const auto& r : session.row) s.correct += r.correct ? 1 : 0;
    s.rule_based = session.rule_based;
    s.followups = session.followups;
    s.failed = session.failed;
    return s;
}

}  // namespace detail

inline int cmd_validate(const std::string& bank_path, bool permissive, std::ostream& out) {
    std::vector<ItemDiagnostic> diagnostics;
    bool loaded = false;
    try {
        LoadOptions opts;
        opts.permissive = permissive;
        LoadReport report;
        load_bank(bank_path, opts, &report);
        diagnostics = report.rejected;
        loaded = true;
    } catch (const BankLoadError& e) {
        diagnostics = e.diagnostics();
    }
    nlohmann::ordered_json doc;
    doc["bank"] = bank_path;
    doc["ok"] = loaded && diagnostics.empty();
    doc["diagnostics"] = nlohmann::ordered_json::array();
    for (const auto& d : diagnostics) {
        doc["diagnostics"].push_back(
            {{"item_id", d.item_id}, {"rule", d.rule}, {"message", d.message}});
    }
    out << doc.dump(2) << "\n";
    return doc["ok"].get<bool>() ? kExitOk : kExitValidation;
}

inline int cmd_calibrate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Subject subject = parse_subject(cfg.subject);
    if (cfg.grades.size() != 1) throw UsageError("calibrate takes exactly one --grade");
    const Grade grade = parse_grade(cfg.grades[0]);
    const auto bank = detail::load_bank_checked(cfg.bank, cfg.permissive, err);
    const auto items = bank.partition(subject, grade);

    std::string csv = "item_id,p,b\n";
    char buf[128];
    for (const auto& item : items) {
        const double p = correct_rate(item);
        std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g\n", item.id.c_str(), p,
                      rasch::item_difficulty(p).value);
        csv += buf;
    }
    const auto path = std::filesystem::path(cfg.out) /
                      ("difficulties_" + detail::grade_tag(subject, cfg.grades[0]) + ".csv");
    io::write_file_atomic(path, csv);
    out << "wrote " << items.size() << " difficulties to " << path.string() << "\n";
    return kExitOk;
}

namespace detail {

struct EvaluatedGrade {
    Grade grade = Grade::G4;
    harness::SessionResult unenforced;
    harness::SessionResult enforced;
    rasch::Ability theta_u;
    rasch::Ability theta_e;
    rasch::ResponseVector baseline_row;
    rasch::Ability theta_baseline;
};

inline EvaluatedGrade score_grade(const RunConfig& cfg, Subject subject, Grade grade,
                                  const std::vector<Item>& items,
                                  harness::SessionResult session_u,
                                  harness::SessionResult session_e) {
    EvaluatedGrade eg;
    eg.grade = grade;
    eg.unenforced = std::move(session_u);
    eg.enforced = std::move(session_e);
    const auto difficulties = partition_difficulties(items);
    eg.theta_u = rasch::estimate_ability(eg.unenforced.row, difficulties);
    eg.theta_e = rasch::estimate_ability(eg.enforced.row, difficulties);
    eg.baseline_row = sim::random_choice_examinee(
        items, session_seed(cfg.seed, grade_tag(subject, grade_level(grade)) + "|baseline"));
    eg.theta_baseline = rasch::estimate_ability(eg.baseline_row, difficulties);
    return eg;
}

inline sim::ResponseMatrix grade_matrix(const std::vector<Item>& items, const RunConfig& cfg,
                                        const EvaluatedGrade& eg) {
    sim::ResponseMatrix m;
    for (const auto& item : items) m.item_ids.push_back(item.id);
    m.examinee_ids = {"unenforced", cfg.mode, "random_choice"};
    m.cells.reserve(3 * items.size());
    for (const auto* row : {&eg.unenforced.row, &eg.enforced.row, &eg.baseline_row})
        for (const auto& r : *row) m.cells.push_back(r.correct ? 1 : 0);
    return m;
}

inline void write_report_artifacts(const RunConfig& cfg, const report::AlignmentReport& rep) {
    const std::filesystem::path dir(cfg.out);
    io::write_file_atomic(dir / "report.json", report_to_json(rep).dump(2) + "\n");
    io::write_file_atomic(dir / "cells.csv", report_to_csv(rep));
}

}  // namespace detail

// Live evaluation: for every requested grade, run the partition through the
// backend once unenforced and once under the enforced mode, estimate both
// abilities, and assemble the alignment report plus audit artifacts.
inline int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Subject subject = parse_subject(cfg.subject);
    const auto mode = prompts::parse_mode(cfg.mode);
    if (!prompts::grade_enforced(mode))
        throw UsageError("--mode must name an enforced regime; the unenforced session always runs");
    if (cfg.grades.empty()) throw UsageError("need at least one --grade");
    if (cfg.out.empty()) throw UsageError("evaluate needs --out");

    const auto bank = detail::load_bank_checked(cfg.bank, cfg.permissive, err);
    const auto lib = prompts::PromptLibrary::from_directory(detail::default_prompt_dir());
    auto be = detail::make_backend(cfg, bank);
    const std::filesystem::path dir(cfg.out);
    io::write_file_atomic(dir / "run_config.json", config_to_json(cfg).dump(2) + "\n");

    report::AlignmentReport rep;
    rep.examinee_id = cfg.backend;
    rep.enforced_mode = cfg.mode;
    rep.stability_threshold = cfg.stability_threshold;
    std::map<Subject, std::map<Grade, double>> theta_e;

    for (int grade_num : cfg.grades) {
        const Grade grade = parse_grade(grade_num);
        const auto items = bank.partition(subject, grade);
        const auto tag = detail::grade_tag(subject, grade_num);

        harness::SessionOptions opts_u, opts_e;
        opts_u.seed = detail::session_seed(cfg.seed, tag + "|unenforced");
        opts_e.seed = detail::session_seed(cfg.seed, tag + "|" + cfg.mode);
        harness::SessionResult session_u, session_e;
        try {
            session_u = harness::run_session(items, prompts::PromptSpec::unenforced(), *be, lib,
                                             opts_u);
            session_e = harness::run_session(
                items, prompts::PromptSpec::enforced(mode, grade), *be, lib, opts_e);
        } catch (const harness::SessionError& e) {
            auto partial = session_u.transcript;
            const auto& rest = e.partial().transcript;
            partial.insert(partial.end(), rest.begin(), rest.end());
            io::write_file_atomic(dir / "transcripts" / (tag + "_partial.jsonl"),
                                  harness::transcript_to_jsonl(partial));
            err << "partial transcript saved for " << tag << "\n";
            throw;
        }

        auto eg = detail::score_grade(cfg, subject, grade, items, std::move(session_u),
                                      std::move(session_e));

        auto transcript = eg.unenforced.transcript;
        transcript.insert(transcript.end(), eg.enforced.transcript.begin(),
                          eg.enforced.transcript.end());
        io::write_file_atomic(dir / "transcripts" / (tag + ".jsonl"),
                              harness::transcript_to_jsonl(transcript));
        io::write_file_atomic(dir / ("matrix_" + tag + ".csv"),
                              sim::matrix_to_csv(detail::grade_matrix(items, cfg, eg)));

        rep.sessions.push_back(detail::summarize(subject, grade, "unenforced", eg.unenforced,
                                                 eg.theta_u));
        rep.sessions.push_back(detail::summarize(subject, grade, cfg.mode, eg.enforced,
                                                 eg.theta_e));
        rep.cells.push_back(alignment::make_cell(cfg.backend, subject, grade,
                                                 rasch::percentile_rank(eg.theta_u),
                                                 rasch::percentile_rank(eg.theta_e)));
        rep.baselines.push_back({subject, grade, eg.theta_baseline.value,
                                 eg.theta_baseline.at_boundary,
                                 rasch::percentile_rank(eg.theta_baseline)});
        theta_e[subject][grade] = eg.theta_e.value;
    }

    report::finalize_subject_summaries(rep, theta_e);
    detail::write_report_artifacts(cfg, rep);
    out << report::render_table(rep);
    return kExitOk;
}

// Replay: rebuild the report from the persisted transcripts and the run
// config stored in the output directory. No backend is constructed, so no
// network or mock traffic can occur.
inline int cmd_replay(const std::string& out_dir, std::ostream& out, std::ostream& err) {
    const std::filesystem::path dir(out_dir);
    const RunConfig cfg = [&] {
        auto stored = config_from_json(nlohmann::json::parse(io::read_file(dir / "run_config.json")));
        stored.out = out_dir;
        return stored;
    }();
    const Subject subject = parse_subject(cfg.subject);
    const auto mode = prompts::parse_mode(cfg.mode);

    const auto bank = detail::load_bank_checked(cfg.bank, cfg.permissive, err);
    report::AlignmentReport rep;
    rep.examinee_id = cfg.backend;
    rep.enforced_mode = cfg.mode;
    rep.stability_threshold = cfg.stability_threshold;
    std::map<Subject, std::map<Grade, double>> theta_e;

    for (int grade_num : cfg.grades) {
        const Grade grade = parse_grade(grade_num);
        const auto items = bank.partition(subject, grade);
        const auto tag = detail::grade_tag(subject, grade_num);
        const auto entries = harness::transcript_from_jsonl(
            io::read_file(dir / "transcripts" / (tag + ".jsonl")));
        auto session_u = harness::replay_session(items, prompts::PromptSpec::unenforced(), entries);
        auto session_e = harness::replay_session(items, prompts::PromptSpec::enforced(mode, grade),
                                                 entries);
        auto eg = detail::score_grade(cfg, subject, grade, items, std::move(session_u),
                                      std::move(session_e));
        rep.sessions.push_back(detail::summarize(subject, grade, "unenforced", eg.unenforced,
                                                 eg.theta_u));
        rep.sessions.push_back(detail::summarize(subject, grade, cfg.mode, eg.enforced,
                                                 eg.theta_e));
        rep.cells.push_back(alignment::make_cell(cfg.backend, subject, grade,
                                                 rasch::percentile_rank(eg.theta_u),
                                                 rasch::percentile_rank(eg.theta_e)));
        rep.baselines.push_back({subject, grade, eg.theta_baseline.value,
                                 eg.theta_baseline.at_boundary,
                                 rasch::percentile_rank(eg.theta_baseline)});
        theta_e[subject][grade] = eg.theta_e.value;
    }

    report::finalize_subject_summaries(rep, theta_e);
    detail::write_report_artifacts(cfg, rep);
    out << report::render_table(rep);
    return kExitOk;
}

// Synthetic cohort round trip: draw a cohort, refit abilities from its own
// response matrix, and report how well the truth comes back.
inline int cmd_simulate(const RunConfig& cfg, std::size_t n_students, std::size_t n_items,
                        std::ostream& out, std::ostream& err) {
    if (cfg.out.empty()) throw UsageError("simulate needs --out");
    std::vector<rasch::Difficulty> difficulties;
    std::vector<std::string> item_ids;
    if (!cfg.bank.empty()) {
        const auto bank = detail::load_bank_checked(cfg.bank, cfg.permissive, err);
        if (cfg.grades.size() != 1) throw UsageError("simulate with --bank takes exactly one --grade");
        const auto items = bank.partition(parse_subject(cfg.subject), parse_grade(cfg.grades[0]));
        difficulties = detail::partition_difficulties(items);
        for (const auto& item : items) item_ids.push_back(item.id);
    } else {
        std::mt19937_64 g(sim::substream_seed(cfg.seed, sim::hash_str("difficulties")));
        for (std::size_t j = 0; j < n_items; ++j)
            difficulties.push_back({stats::normal_quantile(sim::u01_open(g))});
    }

    const auto cohort = sim::simulate_cohort(difficulties, n_students, cfg.seed, item_ids);
    const std::filesystem::path dir(cfg.out);
    io::write_file_atomic(dir / "cohort.csv", sim::matrix_to_csv(cohort.responses));

    std::vector<double> est(n_students);
    std::size_t boundary_count = 0;
    std::string abilities_csv = "examinee_id,theta_true,theta_est,at_boundary\n";
    char buf[128];
    for (std::size_t i = 0; i < n_students; ++i) {
        rasch::ResponseVector row;
        row.reserve(difficulties.size());
        for (std::size_t j = 0; j < difficulties.size(); ++j)
            row.push_back({cohort.responses.item_ids[j], cohort.responses.at(i, j) != 0});
        const auto a = rasch::estimate_ability(row, difficulties);
        est[i] = a.value;
        boundary_count += a.at_boundary ? 1 : 0;
        std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g,%d\n",
                      cohort.responses.examinee_ids[i].c_str(), cohort.abilities[i], est[i],
                      a.at_boundary ? 1 : 0);
        abilities_csv += buf;
    }
    io::write_file_atomic(dir / "abilities.csv", abilities_csv);

    nlohmann::ordered_json recovery;
    recovery["n_students"] = n_students;
    recovery["n_items"] = difficulties.size();
    recovery["seed"] = cfg.seed;
    recovery["pearson_r"] = stats::pearson_correlation(cohort.abilities, est);
    recovery["rmse"] = stats::rmse(cohort.abilities, est);
    recovery["boundary_count"] = boundary_count;
    io::write_file_atomic(dir / "recovery.json", recovery.dump(2) + "\n");
    out << recovery.dump(2) << "\n";
    return kExitOk;
}

// KS normality check over a partition's per-item correct-rates.
inline int cmd_normality(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Subject subject = parse_subject(cfg.subject);
    if (cfg.grades.size() != 1) throw UsageError("normality takes exactly one --grade");
    const Grade grade = parse_grade(cfg.grades[0]);
    const auto bank = detail::load_bank_checked(cfg.bank, cfg.permissive, err);
    const auto items = bank.partition(subject, grade);
    std::vector<double> rates;
    rates.reserve(items.size());
    for (const auto& item : items) rates.push_back(correct_rate(item));

    const auto ks = [&] {
        try {
            return stats::ks_normality(rates);
        } catch (const std::invalid_argument& e) {
            throw ValidationError(e.what());
        }
    }();
    nlohmann::ordered_json doc;
    doc["subject"] = to_string(subject);
    doc["grade"] = grade_level(grade);
    doc["n"] = ks.n;
    doc["statistic"] = ks.statistic;
    doc["p_value"] = ks.p_value;
    doc["fitted_mean"] = ks.fitted_mean;
    doc["fitted_std"] = ks.fitted_std;
    doc["consistent_with_normal"] = ks.consistent_with_normal();
    doc["note"] = stats::kLillieforsNote;
    if (!cfg.out.empty())
        io::write_file_atomic(std::filesystem::path(cfg.out) /
                                  ("ks_" + detail::grade_tag(subject, cfg.grades[0]) + ".json"),
                              doc.dump(2) + "\n");
    out << doc.dump(2) << "\n";
    return kExitOk;
}

inline int cmd_report(const std::string& out_dir, std::ostream& out) {
    const std::filesystem::path dir(out_dir);
    const auto rep = report::report_from_json(nlohmann::json::parse(io::read_file(dir / "report.json")));
    io::write_file_atomic(dir / "cells.csv", report::report_to_csv(rep));
    out << report::render_table(rep);
    return kExitOk;
}

inline int run(std::vector<std::string> args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"Rasch calibration and grade-alignment evaluation"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::size_t n_students = 0;
    std::size_t n_items = 100;

    auto* validate = app.add_subcommand("validate", "check an item bank file");
    validate->add_option("--bank", cfg.bank, "item bank file")->required();
    validate->add_flag("--permissive", cfg.permissive, "skip invalid items instead of failing");

    auto* calibrate = app.add_subcommand("calibrate", "write a difficulty table for a partition");
    calibrate->add_option("--bank", cfg.bank)->required();
    calibrate->add_option("--subject", cfg.subject)->required();
    calibrate->add_option("--grade", cfg.grades)->required();
    calibrate->add_option("--out", cfg.out)->required();
    calibrate->add_flag("--permissive", cfg.permissive);

    auto* evaluate = app.add_subcommand("evaluate", "run an examinee and score grade alignment");
    evaluate->add_option("--bank", cfg.bank);
    evaluate->add_option("--subject", cfg.subject);
    evaluate->add_option("--grade", cfg.grades, "grades to cover (default 4 8 12)");
    evaluate->add_option("--mode", cfg.mode, "enforced prompt regime");
    evaluate->add_option("--backend", cfg.backend,
                         "mock-correct | mock-random | mock-rasch[=theta] | scripted=<file> | remote");
    evaluate->add_option("--endpoint", cfg.endpoint, "remote completion URL");
    evaluate->add_option("--seed", cfg.seed);
    evaluate->add_option("--out", cfg.out)->required();
    evaluate->add_option("--stability-threshold", cfg.stability_threshold);
    evaluate->add_flag("--permissive", cfg.permissive);
    evaluate->add_flag("--replay", cfg.replay, "rebuild the report from persisted transcripts");

    auto* simulate = app.add_subcommand("simulate", "synthetic cohort and ability recovery");
    simulate->add_option("students", n_students, "cohort size")->required()
        ->check(CLI::PositiveNumber);
    simulate->add_option("items", n_items, "item count when no bank is given")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--bank", cfg.bank, "take difficulties from a bank partition");
    simulate->add_option("--subject", cfg.subject);
    simulate->add_option("--grade", cfg.grades);
    simulate->add_option("--seed", cfg.seed);
    simulate->add_option("--out", cfg.out)->required();
    simulate->add_flag("--permissive", cfg.permissive);

    auto* normality = app.add_subcommand("normality", "KS normality check on a partition");
    normality->add_option("--bank", cfg.bank)->required();
    normality->add_option("--subject", cfg.subject)->required();
    normality->add_option("--grade", cfg.grades)->required();
    normality->add_option("--out", cfg.out);
    normality->add_flag("--permissive", cfg.permissive);

    auto* report_cmd = app.add_subcommand("report", "render a persisted report");
    report_cmd->add_option("--out", cfg.out, "run directory holding report.json")->required();

    std::vector<const char*> argv;
    argv.push_back("gradescale");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::ParseError& e) {
            const int rc = app.exit(e, out, err);
            return rc == 0 ? kExitOk : kExitUsage;
        }
        if (validate->parsed()) return cmd_validate(cfg.bank, cfg.permissive, out);
        if (calibrate->parsed()) return cmd_calibrate(cfg, out, err);
        if (evaluate->parsed()) {
            if (cfg.replay) return cmd_replay(cfg.out, out, err);
            if (cfg.bank.empty() || cfg.subject.empty() || cfg.backend.empty())
                throw UsageError("evaluate needs --bank, --subject, and --backend");
            if (cfg.grades.empty()) cfg.grades = {4, 8, 12};
            return cmd_evaluate(cfg, out, err);
        }
        if (simulate->parsed()) return cmd_simulate(cfg, n_students, n_items, out, err);
        if (normality->parsed()) return cmd_normality(cfg, out, err);
        if (report_cmd->parsed()) return cmd_report(cfg.out, out);
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const harness::SessionError& e) {
        err << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const BackendError& e) {
        err << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

}  // namespace gradescale::cli
