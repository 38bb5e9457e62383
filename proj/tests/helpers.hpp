#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gradescale/item_bank.hpp"

namespace testutil {

// Scratch directory removed when the test is done with it.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() /
               ("gradescale-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

// Four-option item whose correct option draws `correct_pct` of the
// population; the remainder splits evenly over the wrong options so the
// percents always sum to 100.
inline gradescale::Item make_item(std::string id, gradescale::Subject subject,
                                  gradescale::Grade grade, double correct_pct,
                                  char correct = 'B', int n_options = 4) {
    gradescale::Item item;
    item.id = std::move(id);
    item.subject = subject;
    item.grade = grade;
    item.stem = "Stem text for " + item.id;
    item.correct_label = correct;
    item.omit_pct = 0.0;
    const double wrong_pct = (100.0 - correct_pct) / (n_options - 1);
    for (int i = 0; i < n_options; ++i) {
        const char label = static_cast<char>('A' + i);
        item.options.push_back({label, std::string("choice ") + label + " of " + item.id});
        item.option_pcts[label] = label == correct ? correct_pct : wrong_pct;
    }
    return item;
}

// A bank with every (subject, grade) partition populated. Correct rates are
// spread over (0.3, 0.9) so difficulties vary and nothing needs clamping.
inline gradescale::ItemBank make_bank(std::size_t per_partition = 12) {
    std::vector<gradescale::Item> items;
    int counter = 0;
    for (auto subject : gradescale::kAllSubjects)
        for (auto grade : gradescale::kAllGrades)
            for (std::size_t i = 0; i < per_partition; ++i) {
                const double pct = 30.0 + 60.0 * static_cast<double>(i) /
                                              static_cast<double>(per_partition);
                const std::string prefix =
                    subject == gradescale::Subject::Mathematics ? "m" : "r";
                items.push_back(make_item(prefix + gradescale::to_string(grade) + "-" +
                                              std::to_string(i),
                                          subject, grade, pct));
                ++counter;
            }
    return gradescale::ItemBank(items, "synthetic test bank");
}

}  // namespace testutil
