#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gradescale/item_bank.hpp"
#include "gradescale/rasch.hpp"
#include "gradescale/stats.hpp"
#include "gradescale/types.hpp"

namespace gradescale::sim {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for an indexed substream. Each examinee draws from its own stream so
// parallel and serial simulation produce identical matrices.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x9e3779b97f4a7c15ULL));
}

inline std::uint64_t hash_str(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Uniform double in [0, 1): top 53 bits of one engine output.
inline double u01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform double in (0, 1), safe to feed the normal quantile.
inline double u01_open(std::mt19937_64& g) {
    return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

// Rectangular dichotomous correctness matrix, row per examinee, column per
// item, stored row-major.
struct ResponseMatrix {
    std::vector<std::string> examinee_ids;
    std::vector<std::string> item_ids;
    std::vector<std::uint8_t> cells;

    std::size_t rows() const { return examinee_ids.size(); }
    std::size_t cols() const { return item_ids.size(); }

    std::uint8_t at(std::size_t row, std::size_t col) const { return cells[row * cols() + col]; }
    void set(std::size_t row, std::size_t col, std::uint8_t v) { cells[row * cols() + col] = v; }

    std::span<const std::uint8_t> row(std::size_t r) const {
        return {cells.data() + r * cols(), cols()};
    }

    friend bool operator==(const ResponseMatrix&, const ResponseMatrix&) = default;
};

// CSV layout: header row "examinee_id" + item ids, then one row per examinee
// with 0/1 cells. Round-trips bit-exact.
inline std::string matrix_to_csv(const ResponseMatrix& m) {
    std::ostringstream out;
    out << "examinee_id";
    for (const auto& id : m.item_ids) out << ',' << id;
    out << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out << m.examinee_ids[i];
        for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << (m.at(i, j) ? '1' : '0');
        out << '\n';
    }
    return out.str();
}

inline ResponseMatrix matrix_from_csv(const std::string& text) {
    ResponseMatrix m;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("response matrix: empty file");
    {
        std::istringstream header(line);
        std::string field;
        if (!std::getline(header, field, ',') || field != "examinee_id")
            throw ValidationError("response matrix: header must start with 'examinee_id'");
        while (std::getline(header, field, ',')) m.item_ids.push_back(field);
    }
    if (m.item_ids.empty()) throw ValidationError("response matrix: no item columns");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        std::getline(row, field, ',');
        m.examinee_ids.push_back(field);
        std::size_t count = 0;
        while (std::getline(row, field, ',')) {
            if (field != "0" && field != "1")
                throw ValidationError("response matrix: cell must be 0 or 1, got '" + field + "'");
            m.cells.push_back(field == "1" ? 1 : 0);
            ++count;
        }
        if (count != m.item_ids.size())
            throw ValidationError("response matrix: ragged row for examinee '" +
                                  m.examinee_ids.back() + "'");
    }
    return m;
}

struct SyntheticCohort {
    std::vector<double> abilities;
    std::uint64_t seed = 0;
    ResponseMatrix responses;
};

namespace detail {

inline void simulate_rows(std::span<const rasch::Difficulty> difficulties, std::uint64_t seed,
                          std::size_t begin, std::size_t end, SyntheticCohort& cohort) {
    for (std::size_t i = begin; i < end; ++i) {
        std::mt19937_64 g(substream_seed(seed, i));
        cohort.abilities[i] = stats::normal_quantile(u01_open(g));
        for (std::size_t j = 0; j < difficulties.size(); ++j) {
            const double p = rasch::response_probability(cohort.abilities[i], difficulties[j]);
            cohort.responses.set(i, j, u01(g) < p ? 1 : 0);
        }
    }
}

}  // namespace detail

// Standard-normal abilities with Bernoulli responses under the Rasch model.
// Examinee i draws ability then responses from substream (seed, i), in that
// order, so any work split over threads reproduces the serial matrix.
inline SyntheticCohort simulate_cohort(std::span<const rasch::Difficulty> difficulties,
                                       std::size_t n_students, std::uint64_t seed,
                                       std::vector<std::string> item_ids = {},
                                       unsigned n_threads = 1) {
    if (n_students == 0) throw std::invalid_argument("simulate_cohort: need at least one student");
    if (difficulties.empty()) throw std::invalid_argument("simulate_cohort: need at least one item");
    if (!item_ids.empty() && item_ids.size() != difficulties.size())
        throw std::invalid_argument("simulate_cohort: item_ids misaligned with difficulties");

    SyntheticCohort cohort;
    cohort.seed = seed;
    cohort.abilities.resize(n_students);
    if (item_ids.empty()) {
        char buf[32];
        for (std::size_t j = 0; j < difficulties.size(); ++j) {
            std::snprintf(buf, sizeof buf, "item%04zu", j);
            item_ids.emplace_back(buf);
        }
    }
    cohort.responses.item_ids = std::move(item_ids);
    cohort.responses.examinee_ids.resize(n_students);
    char buf[32];
    for (std::size_t i = 0; i < n_students; ++i) {
        std::snprintf(buf, sizeof buf, "s%05zu", i);
        cohort.responses.examinee_ids[i] = buf;
    }
    cohort.responses.cells.assign(n_students * difficulties.size(), 0);

    if (n_threads <= 1 || n_students < 2) {
        detail::simulate_rows(difficulties, seed, 0, n_students, cohort);
        return cohort;
    }
    const unsigned workers = std::min<unsigned>(n_threads, static_cast<unsigned>(n_students));
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_students + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n_students, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(
            [&, begin, end] { detail::simulate_rows(difficulties, seed, begin, end, cohort); });
    }
    for (auto& t : pool) t.join();
    return cohort;
}

// Guessing baseline: one option chosen uniformly per item.
inline rasch::ResponseVector random_choice_examinee(const std::vector<Item>& items,
                                                    std::uint64_t seed) {
    if (items.empty()) throw std::invalid_argument("random_choice_examinee: no items");
    rasch::ResponseVector row;
    row.reserve(items.size());
    for (const auto& item : items) {
        std::mt19937_64 g(substream_seed(seed, hash_str(item.id)));
        const auto pick = static_cast<std::size_t>(u01(g) * static_cast<double>(item.options.size()));
        const char label = item.options[std::min(pick, item.options.size() - 1)].label;
        row.push_back({item.id, label == item.correct_label});
    }
    return row;
}

// Per-item mean correctness over the cohort, clamped like bank correct-rates.
inline std::vector<double> empirical_rates_from_cohort(const SyntheticCohort& cohort) {
    if (cohort.responses.rows() == 0 || cohort.responses.cols() == 0)
        throw std::invalid_argument("empirical_rates_from_cohort: empty cohort");
    std::vector<double> rates(cohort.responses.cols(), 0.0);
    for (std::size_t j = 0; j < cohort.responses.cols(); ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < cohort.responses.rows(); ++i) sum += cohort.responses.at(i, j);
        rates[j] = rasch::clamp_proportion(sum / static_cast<double>(cohort.responses.rows()));
    }
    return rates;
}

}  // namespace gradescale::sim
