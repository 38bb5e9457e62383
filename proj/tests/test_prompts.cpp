#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>

#include "gradescale/io.hpp"
#include "gradescale/prompts.hpp"
#include "helpers.hpp"

using namespace gradescale;

namespace {

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

prompts::PromptLibrary shipped_library() {
    return prompts::PromptLibrary::from_directory(GRADESCALE_DEFAULT_PROMPT_DIR);
}

// Writes a minimal but placeholder-complete template set so individual files
// can be broken one at a time.
void write_valid_assets(const std::filesystem::path& dir) {
    for (Subject s : kAllSubjects)
        for (prompts::PromptMode m : prompts::kAllModes) {
            std::string text = prompts::grade_enforced(m) ? "Grade {grade}.\n{stem}\n{options}\n"
                                                          : "{stem}\n{options}\n";
            io::write_file_atomic(dir / prompts::detail::asset_name(s, m), text);
        }
    io::write_file_atomic(dir / prompts::kExtractionAsset, "{response}\n{options}\n");
}

}  // namespace

TEST_CASE("prompt modes map to stable names") {
    using prompts::PromptMode;

    CHECK(prompts::to_string(PromptMode::Unenforced) == "unenforced");
    CHECK(prompts::to_string(PromptMode::GradeEnforcedMinimal) == "grade_enforced_minimal");
    CHECK(prompts::to_string(PromptMode::GradeEnforcedBasicCoT) == "grade_enforced_basic_cot");
    CHECK(prompts::to_string(PromptMode::GradeEnforcedFullCoT) == "grade_enforced_full_cot");

    for (PromptMode m : prompts::kAllModes)
        CHECK(prompts::parse_mode(prompts::to_string(m)) == m);
    CHECK(prompts::parse_mode("minimal") == PromptMode::GradeEnforcedMinimal);
    CHECK(prompts::parse_mode("basic_cot") == PromptMode::GradeEnforcedBasicCoT);
    CHECK(prompts::parse_mode("full_cot") == PromptMode::GradeEnforcedFullCoT);
    CHECK_THROWS_AS(prompts::parse_mode("chain"), std::invalid_argument);

    CHECK_FALSE(prompts::grade_enforced(PromptMode::Unenforced));
    CHECK(prompts::grade_enforced(PromptMode::GradeEnforcedMinimal));
    CHECK(prompts::grade_enforced(PromptMode::GradeEnforcedBasicCoT));
    CHECK(prompts::grade_enforced(PromptMode::GradeEnforcedFullCoT));
}

TEST_CASE("prompt specs pair mode with grade") {
    const auto plain = prompts::PromptSpec::unenforced();
    CHECK(plain.mode == prompts::PromptMode::Unenforced);
    CHECK_FALSE(plain.target_grade.has_value());

    const auto enforced =
        prompts::PromptSpec::enforced(prompts::PromptMode::GradeEnforcedMinimal, Grade::G8);
    CHECK(enforced.target_grade == Grade::G8);

    CHECK_THROWS_AS(prompts::PromptSpec(prompts::PromptMode::Unenforced, Grade::G4),
                    std::invalid_argument);
    CHECK_THROWS_AS(prompts::PromptSpec(prompts::PromptMode::GradeEnforcedFullCoT, std::nullopt),
                    std::invalid_argument);
}

TEST_CASE("options format as lettered lines") {
    const Item item = testutil::make_item("m4-01", Subject::Mathematics, Grade::G4, 50.0);
    CHECK(prompts::format_options(item) ==
          "(A) choice A of m4-01\n"
          "(B) choice B of m4-01\n"
          "(C) choice C of m4-01\n"
          "(D) choice D of m4-01");
}

TEST_CASE("the shipped prompt library renders every regime") {
    const auto lib = shipped_library();

    for (Subject s : kAllSubjects) {
        const Item item = testutil::make_item("x-1", s, Grade::G8, 40.0);
        for (prompts::PromptMode m : prompts::kAllModes) {
            const auto spec = prompts::grade_enforced(m)
                                  ? prompts::PromptSpec::enforced(m, Grade::G8)
                                  : prompts::PromptSpec::unenforced();
            const std::string text = lib.render(item, spec);
            CHECK(contains(text, item.stem));
            CHECK(contains(text, "(A) choice A of x-1"));
            CHECK(contains(text, "Answer:"));
            CHECK_FALSE(contains(text, "{stem}"));
            CHECK_FALSE(contains(text, "{options}"));
            CHECK_FALSE(contains(text, "{grade}"));
            CHECK(lib.render(item, spec) == text);
        }
    }
}

TEST_CASE("enforced templates carry the persona wording") {
    const auto lib = shipped_library();
    const Item item = testutil::make_item("m8-01", Subject::Mathematics, Grade::G8, 40.0);

    const std::string plain = lib.render(item, prompts::PromptSpec::unenforced());
    CHECK_FALSE(contains(plain, "average grade"));

    const std::string minimal = lib.render(
        item, prompts::PromptSpec::enforced(prompts::PromptMode::GradeEnforcedMinimal, Grade::G8));
    CHECK(contains(minimal, "act as an average grade 8 student"));

    const std::string basic = lib.render(
        item, prompts::PromptSpec::enforced(prompts::PromptMode::GradeEnforcedBasicCoT, Grade::G8));
    CHECK(contains(basic, "typical reasoning ability and common error patterns"));

    const std::string full = lib.render(
        item, prompts::PromptSpec::enforced(prompts::PromptMode::GradeEnforcedFullCoT, Grade::G12));
    CHECK(contains(full, "Step 1"));
    CHECK(contains(full, "Step 2"));
    CHECK(contains(full, "grade 12"));
}

TEST_CASE("the extraction prompt embeds the response") {
    const auto lib = shipped_library();
    const Item item = testutil::make_item("r4-01", Subject::Reading, Grade::G4, 60.0);

    const std::string text = lib.render_extraction("Both A and C seem right.", item);
    CHECK(contains(text, "Both A and C seem right."));
    CHECK(contains(text, "(A) choice A of r4-01"));
    CHECK_FALSE(contains(text, "{response}"));
    CHECK_FALSE(contains(text, "{options}"));
}

TEST_CASE("template validation rejects bad placeholders") {
    testutil::TempDir tmp;
    const auto& dir = tmp.path;

    write_valid_assets(dir);
    CHECK_NOTHROW(prompts::PromptLibrary::from_directory(dir));

    SECTION("missing options placeholder") {
        io::write_file_atomic(dir / "math_unenforced.txt", "{stem}\n");
        CHECK_THROWS_AS(prompts::PromptLibrary::from_directory(dir), ValidationError);
    }
    SECTION("grade placeholder in an unenforced template") {
        io::write_file_atomic(dir / "reading_unenforced.txt", "Grade {grade}: {stem}\n{options}\n");
        CHECK_THROWS_AS(prompts::PromptLibrary::from_directory(dir), ValidationError);
    }
    SECTION("enforced template without a grade placeholder") {
        io::write_file_atomic(dir / "math_grade_enforced_minimal.txt", "{stem}\n{options}\n");
        CHECK_THROWS_AS(prompts::PromptLibrary::from_directory(dir), ValidationError);
    }
    SECTION("unknown placeholder") {
        io::write_file_atomic(dir / "math_unenforced.txt", "{stem}\n{options}\n{persona}\n");
        CHECK_THROWS_AS(prompts::PromptLibrary::from_directory(dir), ValidationError);
    }
    SECTION("extraction prompt without the response") {
        io::write_file_atomic(dir / prompts::kExtractionAsset, "{options}\n");
        CHECK_THROWS_AS(prompts::PromptLibrary::from_directory(dir), ValidationError);
    }
    SECTION("missing template file") {
        std::filesystem::remove(dir / "reading_grade_enforced_full_cot.txt");
        CHECK_THROWS_AS(prompts::PromptLibrary::from_directory(dir), std::runtime_error);
    }
}
