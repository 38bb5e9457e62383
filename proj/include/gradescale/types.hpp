#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gradescale {

enum class Subject { Mathematics, Reading };

// Grade values carry the numeric grade level.
enum class Grade : int { G4 = 4, G8 = 8, G12 = 12 };

inline constexpr Grade kAllGrades[] = {Grade::G4, Grade::G8, Grade::G12};
inline constexpr Subject kAllSubjects[] = {Subject::Mathematics, Subject::Reading};

inline int grade_level(Grade g) { return static_cast<int>(g); }

inline std::string to_string(Subject s) {
    return s == Subject::Mathematics ? "Mathematics" : "Reading";
}

inline std::string to_string(Grade g) { return std::to_string(grade_level(g)); }

inline Subject parse_subject(std::string_view text) {
    std::string lower;
    lower.reserve(text.size());
    for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "mathematics" || lower == "math") return Subject::Mathematics;
    if (lower == "reading") return Subject::Reading;
    throw std::invalid_argument("unknown subject: " + std::string(text));
}

inline Grade parse_grade(int level) {
    switch (level) {
        case 4: return Grade::G4;
        case 8: return Grade::G8;
        case 12: return Grade::G12;
        default: throw std::invalid_argument("unknown grade: " + std::to_string(level));
    }
}

// One rule failure for one item, reported by bank validation.
struct ItemDiagnostic {
    std::string item_id;
    std::string rule;
    std::string message;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Carries per-item diagnostics from a failed bank load.
class BankLoadError : public ValidationError {
public:
    BankLoadError(const std::string& what, std::vector<ItemDiagnostic> diagnostics)
        : ValidationError(what), diagnostics_(std::move(diagnostics)) {}

    const std::vector<ItemDiagnostic>& diagnostics() const { return diagnostics_; }

private:
    std::vector<ItemDiagnostic> diagnostics_;
};

class EmptyPartitionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gradescale
