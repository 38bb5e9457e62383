#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gradescale/io.hpp"
#include "gradescale/item_bank.hpp"
#include "gradescale/types.hpp"

namespace gradescale::prompts {

enum class PromptMode {
    Unenforced,
    GradeEnforcedMinimal,
    GradeEnforcedBasicCoT,
    GradeEnforcedFullCoT,
};

inline constexpr PromptMode kAllModes[] = {
    PromptMode::Unenforced,
    PromptMode::GradeEnforcedMinimal,
    PromptMode::GradeEnforcedBasicCoT,
    PromptMode::GradeEnforcedFullCoT,
};

inline bool grade_enforced(PromptMode m) { return m != PromptMode::Unenforced; }

inline std::string to_string(PromptMode m) {
    switch (m) {
        case PromptMode::Unenforced: return "unenforced";
        case PromptMode::GradeEnforcedMinimal: return "grade_enforced_minimal";
        case PromptMode::GradeEnforcedBasicCoT: return "grade_enforced_basic_cot";
        case PromptMode::GradeEnforcedFullCoT: return "grade_enforced_full_cot";
    }
    throw std::logic_error("bad PromptMode");
}

inline PromptMode parse_mode(std::string_view text) {
    for (PromptMode m : kAllModes)
        if (text == to_string(m)) return m;
    // short spellings accepted on the command line
    if (text == "minimal") return PromptMode::GradeEnforcedMinimal;
    if (text == "basic_cot") return PromptMode::GradeEnforcedBasicCoT;
    if (text == "full_cot") return PromptMode::GradeEnforcedFullCoT;
    throw std::invalid_argument("unknown prompt mode: " + std::string(text));
}

// Mode plus target grade. Enforced modes require a grade, Unenforced forbids
// one; the pairing is checked here so nothing downstream has to.
struct PromptSpec {
    PromptMode mode;
    std::optional<Grade> target_grade;

    PromptSpec(PromptMode m, std::optional<Grade> g) : mode(m), target_grade(g) {
        if (grade_enforced(m) && !g)
            throw std::invalid_argument("prompt mode " + prompts::to_string(m) +
                                        " requires a target grade");
        if (!grade_enforced(m) && g)
            throw std::invalid_argument("unenforced prompt mode takes no target grade");
    }

    static PromptSpec unenforced() { return {PromptMode::Unenforced, std::nullopt}; }
    static PromptSpec enforced(PromptMode m, Grade g) { return {m, g}; }
};

// "(A) first option" lines, one per option.
inline std::string format_options(const Item& item) {
    std::string out;
    for (const auto& opt : item.options) {
        if (!out.empty()) out += '\n';
        out += '(';
        out += opt.label;
        out += ") ";
        out += opt.text;
    }
    return out;
}

namespace detail {

inline std::set<std::string> placeholders_in(const std::string& text) {
    std::set<std::string> found;
    std::size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string::npos) {
        const auto close = text.find('}', pos);
        if (close == std::string::npos) break;
        found.insert(text.substr(pos + 1, close - pos - 1));
        pos = close + 1;
    }
    return found;
}

inline std::string substitute(std::string text,
                              const std::map<std::string, std::string>& values) {
    for (const auto& [key, value] : values) {
        const std::string token = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = text.find(token, pos)) != std::string::npos) {
            text.replace(pos, token.size(), value);
            pos += value.size();
        }
    }
    return text;
}

inline std::string asset_name(Subject s, PromptMode m) {
    const std::string prefix = s == Subject::Mathematics ? "math" : "reading";
    return prefix + "_" + prompts::to_string(m) + ".txt";
}

}  // namespace detail

inline constexpr const char* kExtractionAsset = "option_extraction.txt";

// Loads the eight solution templates plus the option-extraction follow-up
// from one directory and checks their placeholders up front. Templates are
// plain text assets so wording changes never touch code.
class PromptLibrary {
  public:
    static PromptLibrary from_directory(const std::filesystem::path& dir) {
        PromptLibrary lib;
        lib.dir_ = dir;
        for (Subject s : kAllSubjects)
            for (PromptMode m : kAllModes) {
                const auto name = detail::asset_name(s, m);
                auto text = io::read_file(dir / name);
                validate_template(name, text, m);
                lib.templates_[key(s, m)] = std::move(text);
            }
        auto extraction = io::read_file(dir / kExtractionAsset);
        validate_extraction(extraction);
        lib.extraction_ = std::move(extraction);
        return lib;
    }

    std::string render(const Item& item, const PromptSpec& spec) const {
        std::map<std::string, std::string> values{
            {"subject", item.subject == Subject::Mathematics ? "mathematics" : "reading"},
            {"stem", item.stem},
            {"options", format_options(item)},
        };
        if (spec.target_grade) values["grade"] = gradescale::to_string(*spec.target_grade);
        return detail::substitute(templates_.at(key(item.subject, spec.mode)), values);
    }

    std::string render_extraction(const std::string& response, const Item& item) const {
        return detail::substitute(extraction_,
                                  {{"response", response}, {"options", format_options(item)}});
    }

    const std::filesystem::path& directory() const { return dir_; }

  private:
    static int key(Subject s, PromptMode m) {
        return static_cast<int>(s) * 8 + static_cast<int>(m);
    }

    static void validate_template(const std::string& name, const std::string& text,
                                  PromptMode mode) {
        const auto found = detail::placeholders_in(text);
        for (const char* required : {"stem", "options"})
            if (!found.count(required))
                throw ValidationError("prompt template " + name + ": missing {" +
                                      required + "}");
        if (grade_enforced(mode) && !found.count("grade"))
            throw ValidationError("prompt template " + name + ": missing {grade}");
        if (!grade_enforced(mode) && found.count("grade"))
            throw ValidationError("prompt template " + name +
                                  ": {grade} not allowed in an unenforced template");
        for (const auto& p : found)
            if (p != "stem" && p != "options" && p != "grade" && p != "subject")
                throw ValidationError("prompt template " + name + ": unknown placeholder {" +
                                      p + "}");
    }

    static void validate_extraction(const std::string& text) {
        const auto found = detail::placeholders_in(text);
        for (const char* required : {"response", "options"})
            if (!found.count(required))
                throw ValidationError(std::string("prompt template ") + kExtractionAsset +
                                      ": missing {" + required + "}");
        for (const auto& p : found)
            if (p != "response" && p != "options")
                throw ValidationError(std::string("prompt template ") + kExtractionAsset +
                                      ": unknown placeholder {" + p + "}");
    }

    std::filesystem::path dir_;
    std::map<int, std::string> templates_;
    std::string extraction_;
};

}  // namespace gradescale::prompts
