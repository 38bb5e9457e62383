#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gradescale/io.hpp"
#include "gradescale/rasch.hpp"
#include "gradescale/types.hpp"

namespace gradescale {

struct ItemOption {
    char label = 'A';
    std::string text;

    friend bool operator==(const ItemOption&, const ItemOption&) = default;
};

// One multiple-choice item together with the population response percentages
// published for it. The stem holds the full presented text; for reading items
// that includes the passage ahead of the question.
struct Item {
    std::string id;
    Subject subject = Subject::Mathematics;
    Grade grade = Grade::G4;
    std::string stem;
    std::vector<ItemOption> options;
    char correct_label = 'A';
    std::map<char, double> option_pcts;
    double omit_pct = 0.0;

    friend bool operator==(const Item&, const Item&) = default;
};

namespace detail {

// Markers that reveal non-text content. Items carrying any of these fail the
// text-only rule.
inline const std::vector<std::string>& media_markers() {
    static const std::vector<std::string> markers = {
        "[image]", "[figure]", "[table]", "[diagram]", "[chart]", "[graph]", "[img]", "<img",
    };
    return markers;
}

inline std::string to_lower(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

inline bool is_blank(const std::string& text) {
    return std::all_of(text.begin(), text.end(),
                       [](unsigned char c) { return std::isspace(c); });
}

}  // namespace detail

inline constexpr double kPercentSumLow = 99.0;
inline constexpr double kPercentSumHigh = 101.0;

// Keeps the inclusive window honest when one-decimal percentages accumulate
// floating-point noise right at an edge.
inline constexpr double kPercentSumSlack = 1e-9;

// Checks every per-item invariant; returns one diagnostic per violated rule.
inline std::vector<ItemDiagnostic> validate_item(const Item& item) {
    std::vector<ItemDiagnostic> out;
    auto fail = [&](std::string rule, std::string message) {
        out.push_back({item.id, std::move(rule), std::move(message)});
    };

    if (item.options.size() < 2 || item.options.size() > 26)
        fail("option_count", "item must have between 2 and 26 options, has " +
                                 std::to_string(item.options.size()));

    bool labels_ok = true;
    for (std::size_t i = 0; i < item.options.size(); ++i) {
        const char expected = static_cast<char>('A' + i);
        if (item.options[i].label != expected) {
            labels_ok = false;
            fail("label_sequence", std::string("option labels must run consecutively from 'A'; "
                                               "position ") +
                                       std::to_string(i) + " has '" + item.options[i].label + "'");
            break;
        }
    }

    const bool correct_known =
        std::any_of(item.options.begin(), item.options.end(),
                    [&](const ItemOption& o) { return o.label == item.correct_label; });
    if (!correct_known)
        fail("correct_label", std::string("correct_label '") + item.correct_label +
                                  "' is not among the option labels");

    if (labels_ok) {
        bool keys_ok = item.option_pcts.size() == item.options.size();
        for (const auto& opt : item.options)
            if (!item.option_pcts.count(opt.label)) keys_ok = false;
        if (!keys_ok) {
            fail("option_pcts_keys", "option_pcts keys must match the option labels exactly");
        } else {
            double sum = item.omit_pct;
            bool range_ok = item.omit_pct >= 0.0 && item.omit_pct <= 100.0;
            for (const auto& [label, pct] : item.option_pcts) {
                if (!(pct >= 0.0 && pct <= 100.0)) range_ok = false;
                sum += pct;
            }
            if (!range_ok) {
                fail("percent_range", "each option percentage and omit_pct must lie in [0,100]");
            } else if (sum < kPercentSumLow - kPercentSumSlack ||
                       sum > kPercentSumHigh + kPercentSumSlack) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.6g", sum);
                fail("percent_sum", "option percentages plus omit_pct must sum to 100 +/- 1, got " +
                                        std::string(buf));
            }
        }
    }

    if (item.stem.empty() || detail::is_blank(item.stem)) {
        fail("stem_nonempty", "stem must be non-empty text");
    } else {
        const std::string lower = detail::to_lower(item.stem);
        for (const auto& marker : detail::media_markers()) {
            if (lower.find(marker) != std::string::npos) {
                fail("text_only", "stem contains non-text placeholder '" + marker + "'");
                break;
            }
        }
    }

    for (const auto& opt : item.options) {
        const std::string lower = detail::to_lower(opt.text);
        bool flagged = false;
        for (const auto& marker : detail::media_markers()) {
            if (lower.find(marker) != std::string::npos) {
                fail("text_only", std::string("option ") + opt.label +
                                      " contains non-text placeholder '" + marker + "'");
                flagged = true;
                break;
            }
        }
        if (flagged) break;
    }

    return out;
}

// Empirical proportion answering the item correctly, p_j. Omissions are part
// of the 100% base, so they count against correctness. Clamped so the
// difficulty transform stays finite.
inline double correct_rate(const Item& item) {
    const auto it = item.option_pcts.find(item.correct_label);
    if (it == item.option_pcts.end())
        throw ValidationError("correct_rate: item '" + item.id + "' lacks a percentage for its key");
    return rasch::clamp_proportion(it->second / 100.0);
}

// Immutable, fully validated item collection.
class ItemBank {
public:
    ItemBank(std::vector<Item> items, std::string provenance)
        : items_(std::move(items)), provenance_(std::move(provenance)) {
        std::vector<ItemDiagnostic> diagnostics;
        std::map<std::string, int> seen;
        for (const auto& item : items_) {
            auto item_diags = validate_item(item);
            diagnostics.insert(diagnostics.end(), item_diags.begin(), item_diags.end());
            if (++seen[item.id] == 2)
                diagnostics.push_back({item.id, "unique_id", "duplicate item id '" + item.id + "'"});
        }
        if (!diagnostics.empty())
            throw BankLoadError("item bank failed validation (" +
                                    std::to_string(diagnostics.size()) + " rule violations)",
                                std::move(diagnostics));
    }

    const std::vector<Item>& items() const { return items_; }
    const std::string& provenance() const { return provenance_; }

    // Items of one (subject, grade) cell in lexicographic id order. An empty
    // cell is an error, not an empty result.
    std::vector<Item> partition(Subject subject, Grade grade) const {
        std::vector<Item> out;
        for (const auto& item : items_)
            if (item.subject == subject && item.grade == grade) out.push_back(item);
        if (out.empty())
            throw EmptyPartitionError("empty partition: no items for (" + to_string(subject) +
                                      ", grade " + to_string(grade) + ")");
        std::sort(out.begin(), out.end(), [](const Item& a, const Item& b) { return a.id < b.id; });
        return out;
    }

    bool has_partition(Subject subject, Grade grade) const {
        return std::any_of(items_.begin(), items_.end(), [&](const Item& item) {
            return item.subject == subject && item.grade == grade;
        });
    }

    friend bool operator==(const ItemBank& a, const ItemBank& b) {
        return a.items_ == b.items_ && a.provenance_ == b.provenance_;
    }

private:
    std::vector<Item> items_;
    std::string provenance_;
};

namespace detail {

inline char parse_label(const nlohmann::json& j, const std::string& context) {
    if (!j.is_string() || j.get<std::string>().size() != 1)
        throw ValidationError(context + ": labels must be single-letter strings");
    const char c = j.get<std::string>()[0];
    if (c < 'A' || c > 'Z')
        throw ValidationError(context + ": labels must be upper-case letters, got '" +
                              j.get<std::string>() + "'");
    return c;
}

inline Item item_from_json(const nlohmann::json& j) {
    Item item;
    item.id = j.at("id").get<std::string>();
    item.subject = parse_subject(j.at("subject").get<std::string>());
    item.grade = parse_grade(j.at("grade").get<int>());
    item.stem = j.at("stem").get<std::string>();
    for (const auto& opt : j.at("options")) {
        ItemOption o;
        o.label = parse_label(opt.at("label"), "item '" + item.id + "'");
        o.text = opt.at("text").get<std::string>();
        item.options.push_back(std::move(o));
    }
    item.correct_label = parse_label(j.at("correct_label"), "item '" + item.id + "'");
    for (const auto& [key, value] : j.at("option_pcts").items()) {
        if (key.size() != 1 || key[0] < 'A' || key[0] > 'Z')
            throw ValidationError("item '" + item.id + "': option_pcts keys must be single letters");
        item.option_pcts[key[0]] = value.get<double>();
    }
    item.omit_pct = j.at("omit_pct").get<double>();
    return item;
}

inline nlohmann::ordered_json item_to_json(const Item& item) {
    nlohmann::ordered_json j;
    j["id"] = item.id;
    j["subject"] = to_string(item.subject);
    j["grade"] = grade_level(item.grade);
    j["stem"] = item.stem;
    j["options"] = nlohmann::ordered_json::array();
    for (const auto& opt : item.options)
        j["options"].push_back({{"label", std::string(1, opt.label)}, {"text", opt.text}});
    j["correct_label"] = std::string(1, item.correct_label);
    nlohmann::ordered_json pcts;
    for (const auto& [label, pct] : item.option_pcts) pcts[std::string(1, label)] = pct;
    j["option_pcts"] = std::move(pcts);
    j["omit_pct"] = item.omit_pct;
    return j;
}

}  // namespace detail

struct LoadOptions {
    // With permissive set, items that fail validation are skipped and listed
    // instead of failing the whole load.
    bool permissive = false;
};

struct LoadReport {
    std::vector<ItemDiagnostic> rejected;
};

inline ItemBank bank_from_json(const nlohmann::json& doc, LoadOptions options = {},
                               LoadReport* report = nullptr) {
    if (!doc.is_object() || !doc.contains("items") || !doc.at("items").is_array())
        throw ValidationError("bank file must be an object with an 'items' array");
    const std::string provenance = doc.value("provenance", std::string{});

    std::vector<Item> items;
    std::vector<ItemDiagnostic> diagnostics;
    std::map<std::string, int> seen;
    for (const auto& record : doc.at("items")) {
        Item item;
        try {
            item = detail::item_from_json(record);
        } catch (const std::exception& e) {
            diagnostics.push_back({record.value("id", std::string("<unknown>")), "schema", e.what()});
            continue;
        }
        auto item_diags = validate_item(item);
        if (++seen[item.id] == 2)
            item_diags.push_back({item.id, "unique_id", "duplicate item id '" + item.id + "'"});
        if (item_diags.empty()) {
            items.push_back(std::move(item));
        } else {
            diagnostics.insert(diagnostics.end(), item_diags.begin(), item_diags.end());
        }
    }

    if (!diagnostics.empty() && !options.permissive)
        throw BankLoadError("item bank failed validation (" + std::to_string(diagnostics.size()) +
                                " rule violations)",
                            std::move(diagnostics));
    if (report) report->rejected = std::move(diagnostics);
    return ItemBank(std::move(items), provenance);
}

inline ItemBank load_bank(const std::filesystem::path& path, LoadOptions options = {},
                          LoadReport* report = nullptr) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("malformed bank file " + path.string() + ": " + e.what());
    }
    return bank_from_json(doc, options, report);
}

inline nlohmann::ordered_json bank_to_json(const ItemBank& bank) {
    nlohmann::ordered_json doc;
    doc["provenance"] = bank.provenance();
    doc["items"] = nlohmann::ordered_json::array();
    for (const auto& item : bank.items()) doc["items"].push_back(detail::item_to_json(item));
    return doc;
}

inline void save_bank(const ItemBank& bank, const std::filesystem::path& path) {
    io::write_file_atomic(path, bank_to_json(bank).dump(2) + "\n");
}

}  // namespace gradescale
