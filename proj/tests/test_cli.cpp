#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "gradescale/cli.hpp"
#include "gradescale/stats.hpp"
#include "helpers.hpp"

using Catch::Approx;
using namespace gradescale;

namespace {

struct CliRun {
    int rc = 0;
    std::string out;
    std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int rc = cli::run(std::move(args), out, err);
    return {rc, out.str(), err.str()};
}

std::string bank_file(const testutil::TempDir& tmp, std::size_t per_partition = 8) {
    const auto path = tmp.path / "bank.json";
    save_bank(testutil::make_bank(per_partition), path);
    return path.string();
}

}  // namespace

TEST_CASE("run configs round-trip through json") {
    cli::RunConfig cfg;
    cfg.bank = "bank.json";
    cfg.subject = "reading";
    cfg.grades = {8, 12};
    cfg.mode = "grade_enforced_full_cot";
    cfg.backend = "mock-rasch=0.5";
    cfg.endpoint = "http://example.test/v1";
    cfg.seed = 77;
    cfg.out = "run1";
    cfg.stability_threshold = 12.5;
    cfg.permissive = true;

    const auto back = cli::config_from_json(cli::config_to_json(cfg));
    CHECK(back.bank == cfg.bank);
    CHECK(back.subject == cfg.subject);
    CHECK(back.grades == cfg.grades);
    CHECK(back.mode == cfg.mode);
    CHECK(back.backend == cfg.backend);
    CHECK(back.endpoint == cfg.endpoint);
    CHECK(back.seed == cfg.seed);
    CHECK(back.out == cfg.out);
    CHECK(back.stability_threshold == cfg.stability_threshold);
    CHECK(back.permissive == cfg.permissive);
}

TEST_CASE("validate reports diagnostics as json") {
    testutil::TempDir tmp;
    const auto bank = bank_file(tmp, 4);

    SECTION("a clean bank passes") {
        const auto r = run_cli({"validate", "--bank", bank});
        CHECK(r.rc == cli::kExitOk);
        const auto doc = nlohmann::json::parse(r.out);
        CHECK(doc.at("ok").get<bool>());
        CHECK(doc.at("diagnostics").empty());
    }
    SECTION("violations are listed with their rule") {
        auto doc = nlohmann::json::parse(io::read_file(bank));
        doc["items"][0]["omit_pct"] = 40.0;
        const auto dirty = (tmp.path / "dirty.json").string();
        io::write_file_atomic(dirty, doc.dump(2) + "\n");

        const auto strict = run_cli({"validate", "--bank", dirty});
        CHECK(strict.rc == cli::kExitValidation);
        const auto verdict = nlohmann::json::parse(strict.out);
        CHECK_FALSE(verdict.at("ok").get<bool>());
        REQUIRE(verdict.at("diagnostics").size() == 1);
        CHECK(verdict.at("diagnostics")[0].at("rule") == "percent_sum");

        const auto permissive = run_cli({"validate", "--bank", dirty, "--permissive"});
        CHECK(permissive.rc == cli::kExitValidation);
        CHECK(nlohmann::json::parse(permissive.out).at("diagnostics").size() == 1);
    }
    SECTION("a malformed file is a validation error") {
        const auto junk = (tmp.path / "junk.json").string();
        io::write_file_atomic(junk, "not json");
        const auto r = run_cli({"validate", "--bank", junk});
        CHECK(r.rc == cli::kExitValidation);
        CHECK(r.err.find("error:") != std::string::npos);
    }
}

TEST_CASE("calibrate writes the difficulty table") {
    testutil::TempDir tmp;
    std::vector<Item> items{
        testutil::make_item("m4-a", Subject::Mathematics, Grade::G4, 50.0),
        testutil::make_item("m4-b", Subject::Mathematics, Grade::G4, 73.1),
    };
    const auto bank_path = (tmp.path / "two.json").string();
    save_bank(ItemBank(items, "fixture"), bank_path);

    const auto r = run_cli({"calibrate", "--bank", bank_path, "--subject", "math", "--grade", "4",
                            "--out", tmp.path.string()});
    CHECK(r.rc == cli::kExitOk);
    CHECK(io::read_file(tmp.path / "difficulties_mathematics_g4.csv") ==
          "item_id,p,b\n"
          "m4-a,0.5,0\n"
          "m4-b,0.731,-0.999702080148\n");

    CHECK(run_cli({"calibrate", "--bank", bank_path, "--subject", "math", "--grade", "4",
                   "--grade", "8", "--out", tmp.path.string()})
              .rc == cli::kExitUsage);
    CHECK(run_cli({"calibrate", "--bank", bank_path, "--subject", "reading", "--grade", "4",
                   "--out", tmp.path.string()})
              .rc == cli::kExitValidation);
}

TEST_CASE("evaluate writes a deterministic report") {
    testutil::TempDir tmp;
    const auto bank = bank_file(tmp);
    const auto dir1 = (tmp.path / "run1").string();
    const auto dir2 = (tmp.path / "run2").string();

    const std::vector<std::string> base{"evaluate", "--bank",    bank,
                                        "--subject", "math",     "--backend",
                                        "mock-random", "--seed", "3"};
    auto with_out = [&](const std::string& dir) {
        auto args = base;
        args.push_back("--out");
        args.push_back(dir);
        return args;
    };

    const auto first = run_cli(with_out(dir1));
    REQUIRE(first.rc == cli::kExitOk);
    CHECK(first.out.find("examinee: mock-random") != std::string::npos);

    for (const char* tag : {"mathematics_g4", "mathematics_g8", "mathematics_g12"}) {
        CHECK(std::filesystem::exists(tmp.path / "run1" / "transcripts" /
                                      (std::string(tag) + ".jsonl")));
        CHECK(std::filesystem::exists(tmp.path / "run1" /
                                      ("matrix_" + std::string(tag) + ".csv")));
    }
    CHECK(std::filesystem::exists(tmp.path / "run1" / "run_config.json"));
    CHECK(std::filesystem::exists(tmp.path / "run1" / "cells.csv"));

    const auto second = run_cli(with_out(dir2));
    REQUIRE(second.rc == cli::kExitOk);
    CHECK(io::read_file(tmp.path / "run1" / "report.json") ==
          io::read_file(tmp.path / "run2" / "report.json"));
    CHECK(io::read_file(tmp.path / "run1" / "cells.csv") ==
          io::read_file(tmp.path / "run2" / "cells.csv"));

    const auto doc = nlohmann::json::parse(io::read_file(tmp.path / "run1" / "report.json"));
    CHECK(doc.at("sessions").size() == 6);
    CHECK(doc.at("cells").size() == 3);
    CHECK(doc.at("baselines").size() == 3);

    SECTION("replay reproduces the artifacts without backend traffic") {
        const auto report_before = io::read_file(tmp.path / "run1" / "report.json");
        const auto cells_before = io::read_file(tmp.path / "run1" / "cells.csv");

        const auto calls_before = backend::ExamineeBackend::total_calls();
        const auto replay = run_cli({"evaluate", "--replay", "--out", dir1});
        CHECK(replay.rc == cli::kExitOk);
        CHECK(backend::ExamineeBackend::total_calls() == calls_before);
        CHECK(io::read_file(tmp.path / "run1" / "report.json") == report_before);
        CHECK(io::read_file(tmp.path / "run1" / "cells.csv") == cells_before);
    }
    SECTION("the report subcommand re-renders persisted results") {
        const auto cells_before = io::read_file(tmp.path / "run1" / "cells.csv");
        std::filesystem::remove(tmp.path / "run1" / "cells.csv");
        const auto r = run_cli({"report", "--out", dir1});
        CHECK(r.rc == cli::kExitOk);
        CHECK(r.out.find("examinee: mock-random") != std::string::npos);
        CHECK(io::read_file(tmp.path / "run1" / "cells.csv") == cells_before);
    }
}

TEST_CASE("a perfect examinee pegs the ability ceiling") {
    testutil::TempDir tmp;
    const auto bank = bank_file(tmp);
    const auto dir = (tmp.path / "ace").string();

    const auto r = run_cli({"evaluate", "--bank", bank, "--subject", "math", "--grade", "4",
                            "--backend", "mock-correct", "--out", dir});
    REQUIRE(r.rc == cli::kExitOk);

    const auto doc = nlohmann::json::parse(io::read_file(tmp.path / "ace" / "report.json"));
    REQUIRE(doc.at("sessions").size() == 2);
    for (const auto& s : doc.at("sessions")) {
        CHECK(s.at("theta").get<double>() == Approx(6.0));
        CHECK(s.at("at_boundary").get<bool>());
        CHECK(s.at("percentile").get<double>() > 99.99);
        CHECK(s.at("percentile").get<double>() < 100.0);
    }
    const auto& subject = doc.at("subjects")[0];
    CHECK_FALSE(subject.at("rubric").at("evaluable").get<bool>());
    CHECK(subject.at("rubric").at("note") == "run covers fewer than three grades");
}

TEST_CASE("a median rasch examinee scores near the middle") {
    testutil::TempDir tmp;
    const auto bank = bank_file(tmp, 100);
    const auto dir = (tmp.path / "median").string();

    const auto r = run_cli({"evaluate", "--bank", bank, "--subject", "math", "--grade", "8",
                            "--backend", "mock-rasch", "--seed", "12", "--out", dir});
    REQUIRE(r.rc == cli::kExitOk);

    const auto doc = nlohmann::json::parse(io::read_file(tmp.path / "median" / "report.json"));
    for (const auto& s : doc.at("sessions")) {
        CHECK(s.at("percentile").get<double>() > 36.0);
        CHECK(s.at("percentile").get<double>() < 64.0);
        CHECK(s.at("items").get<int>() == 100);
    }
    // The guessing baseline on four options sits far below the median student.
    CHECK(doc.at("baselines")[0].at("percentile").get<double>() < 36.0);
}

TEST_CASE("scripted backends replay canned responses") {
    testutil::TempDir tmp;
    const auto bank_path = (tmp.path / "one.json").string();
    save_bank(ItemBank({testutil::make_item("m4-0", Subject::Mathematics, Grade::G4, 40.0)},
                       "fixture"),
              bank_path);

    SECTION("follow-ups run through the script") {
        nlohmann::json script{
            {"m4-0|unenforced", "Answer: B"},
            {"m4-0|grade_enforced_minimal", "Both A and C seem right."},
            {"m4-0|extraction", "C"},
        };
        const auto script_path = (tmp.path / "script.json").string();
        io::write_file_atomic(script_path, script.dump(2) + "\n");

        const auto dir = (tmp.path / "scripted").string();
        const auto r = run_cli({"evaluate", "--bank", bank_path, "--subject", "math", "--grade",
                                "4", "--backend", "scripted=" + script_path, "--out", dir});
        REQUIRE(r.rc == cli::kExitOk);

        const auto doc = nlohmann::json::parse(io::read_file(tmp.path / "scripted" / "report.json"));
        CHECK(doc.at("sessions")[0].at("correct").get<int>() == 1);
        CHECK(doc.at("sessions")[1].at("correct").get<int>() == 0);
        CHECK(doc.at("sessions")[1].at("followups").get<int>() == 1);
    }
    SECTION("a script hole aborts with a partial transcript") {
        nlohmann::json script{{"m4-0|unenforced", "Answer: B"}};
        const auto script_path = (tmp.path / "holey.json").string();
        io::write_file_atomic(script_path, script.dump(2) + "\n");

        const auto dir = (tmp.path / "aborted").string();
        const auto r = run_cli({"evaluate", "--bank", bank_path, "--subject", "math", "--grade",
                                "4", "--backend", "scripted=" + script_path, "--out", dir});
        CHECK(r.rc == cli::kExitBackend);
        const auto partial = tmp.path / "aborted" / "transcripts" / "mathematics_g4_partial.jsonl";
        REQUIRE(std::filesystem::exists(partial));
        const auto entries = harness::transcript_from_jsonl(io::read_file(partial));
        REQUIRE(entries.size() == 1);
        CHECK(entries[0].mode == "unenforced");
    }
}

TEST_CASE("simulate writes recovery artifacts") {
    testutil::TempDir tmp;
    const auto dir = (tmp.path / "sim").string();

    const auto r = run_cli({"simulate", "60", "40", "--seed", "9", "--out", dir});
    REQUIRE(r.rc == cli::kExitOk);

    const auto recovery = nlohmann::json::parse(io::read_file(tmp.path / "sim" / "recovery.json"));
    CHECK(recovery.at("n_students").get<int>() == 60);
    CHECK(recovery.at("n_items").get<int>() == 40);
    CHECK(recovery.at("seed").get<int>() == 9);
    CHECK(recovery.at("pearson_r").get<double>() > 0.7);
    CHECK(recovery.at("rmse").get<double>() < 0.8);

    const auto cohort = io::read_file(tmp.path / "sim" / "cohort.csv");
    CHECK(cohort.rfind("examinee_id,item0000,", 0) == 0);
    const auto abilities = io::read_file(tmp.path / "sim" / "abilities.csv");
    CHECK(std::count(abilities.begin(), abilities.end(), '\n') == 61);

    SECTION("reruns are bitwise stable") {
        const auto dir2 = (tmp.path / "sim2").string();
        REQUIRE(run_cli({"simulate", "60", "40", "--seed", "9", "--out", dir2}).rc == cli::kExitOk);
        CHECK(io::read_file(tmp.path / "sim2" / "cohort.csv") == cohort);
        CHECK(io::read_file(tmp.path / "sim2" / "abilities.csv") == abilities);
    }
    SECTION("difficulties can come from a bank partition") {
        const auto bank = bank_file(tmp, 4);
        const auto dir3 = (tmp.path / "sim3").string();
        REQUIRE(run_cli({"simulate", "20", "--bank", bank, "--subject", "math", "--grade", "4",
                         "--out", dir3})
                    .rc == cli::kExitOk);
        const auto header = io::read_file(tmp.path / "sim3" / "cohort.csv");
        CHECK(header.rfind("examinee_id,m4-0,m4-1,m4-2,m4-3\n", 0) == 0);

        CHECK(run_cli({"simulate", "20", "--bank", bank, "--subject", "math", "--grade", "4",
                       "--grade", "8", "--out", dir3})
                  .rc == cli::kExitUsage);
    }
}

TEST_CASE("normality judges a partition's correct-rates") {
    testutil::TempDir tmp;

    // Correct rates drawn from the quantiles of N(50, 15) so the fitted-normal
    // check should come back comfortably consistent.
    std::vector<Item> items;
    for (int i = 0; i < 12; ++i) {
        const double u = (static_cast<double>(i) + 0.5) / 12.0;
        const double pct = 50.0 + 15.0 * stats::normal_quantile(u);
        items.push_back(testutil::make_item("m4-q" + std::to_string(i), Subject::Mathematics,
                                            Grade::G4, pct));
    }
    const auto bank_path = (tmp.path / "quantiles.json").string();
    save_bank(ItemBank(items, "fixture"), bank_path);

    const auto r = run_cli({"normality", "--bank", bank_path, "--subject", "math", "--grade", "4",
                            "--out", tmp.path.string()});
    REQUIRE(r.rc == cli::kExitOk);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc.at("n").get<int>() == 12);
    CHECK(doc.at("p_value").get<double>() > 0.05);
    CHECK(doc.at("consistent_with_normal").get<bool>());
    CHECK(doc.at("fitted_mean").get<double>() == Approx(0.5).margin(0.02));
    CHECK(doc.at("note").get<std::string>() == stats::kLillieforsNote);

    CHECK(io::read_file(tmp.path / "ks_mathematics_g4.json") == r.out);

    SECTION("a partition too small to test is a validation error") {
        const auto tiny = bank_file(tmp, 5);
        const auto small = run_cli({"normality", "--bank", tiny, "--subject", "math", "--grade",
                                    "4"});
        CHECK(small.rc == cli::kExitValidation);
    }
}

TEST_CASE("usage mistakes exit with the usage code") {
    testutil::TempDir tmp;
    const auto bank = bank_file(tmp, 4);
    const auto out = (tmp.path / "o").string();

    CHECK(run_cli({"frobnicate"}).rc == cli::kExitUsage);
    CHECK(run_cli({}).rc == cli::kExitUsage);
    CHECK(run_cli({"evaluate", "--bank", bank, "--subject", "math", "--backend", "mock-correct"})
              .rc == cli::kExitUsage);
    CHECK(run_cli({"evaluate", "--bank", bank, "--subject", "math", "--backend", "mock-correct",
                   "--mode", "unenforced", "--out", out})
              .rc == cli::kExitUsage);
    CHECK(run_cli({"evaluate", "--bank", bank, "--subject", "math", "--backend", "nonsense",
                   "--out", out})
              .rc == cli::kExitUsage);
    CHECK(run_cli({"evaluate", "--bank", bank, "--subject", "math",
                   "--backend", "mock-rasch=abc", "--out", out})
              .rc == cli::kExitUsage);
    CHECK(run_cli({"evaluate", "--bank", bank, "--subject", "math", "--backend", "remote",
                   "--out", out})
              .rc == cli::kExitUsage);
    CHECK(run_cli({"evaluate", "--out", out}).rc == cli::kExitUsage);
    CHECK(run_cli({"simulate", "0", "--out", out}).rc == cli::kExitUsage);
    CHECK(run_cli({"simulate", "--out", out}).rc == cli::kExitUsage);

    const auto help = run_cli({"--help"});
    CHECK(help.rc == cli::kExitOk);
    CHECK(help.out.find("validate") != std::string::npos);
}
