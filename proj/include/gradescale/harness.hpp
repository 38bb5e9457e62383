#pragma once

#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "gradescale/backend.hpp"
#include "gradescale/io.hpp"
#include "gradescale/item_bank.hpp"
#include "gradescale/prompts.hpp"
#include "gradescale/rasch.hpp"
#include "gradescale/types.hpp"

namespace gradescale::harness {

enum class ExtractionMethod { RuleBased, FollowUpPrompt, Failed };

inline std::string to_string(ExtractionMethod m) {
    switch (m) {
        case ExtractionMethod::RuleBased: return "rule_based";
        case ExtractionMethod::FollowUpPrompt: return "follow_up_prompt";
        case ExtractionMethod::Failed: return "failed";
    }
    throw std::logic_error("bad ExtractionMethod");
}

inline ExtractionMethod parse_method(std::string_view text) {
    if (text == "rule_based") return ExtractionMethod::RuleBased;
    if (text == "follow_up_prompt") return ExtractionMethod::FollowUpPrompt;
    if (text == "failed") return ExtractionMethod::Failed;
    throw std::invalid_argument("unknown extraction method: " + std::string(text));
}

struct RawResponse {
    std::string item_id;
    prompts::PromptMode mode = prompts::PromptMode::Unenforced;
    std::string text;
    std::optional<char> extracted;
    ExtractionMethod method = ExtractionMethod::Failed;
    std::optional<std::string> followup_prompt;
    std::optional<std::string> followup_raw;
};

namespace detail {

inline bool is_option_label(char c, const Item& item) {
    for (const auto& opt : item.options)
        if (opt.label == c) return true;
    return false;
}

inline std::string strip_token(std::string token) {
    const auto junk = [](char c) {
        return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':' ||
               c == '"' || c == '\'' || c == '*' || c == '`';
    };
    while (!token.empty() && junk(token.back())) token.pop_back();
    while (!token.empty() && junk(token.front())) token.erase(token.begin());
    return token;
}

inline std::vector<std::string> tokens_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

// Token reduced to a bare label: "B", "(B)", "B)" and punctuated variants.
inline std::optional<char> token_label(const std::string& raw, const Item& item) {
    std::string t = strip_token(raw);
    if (t.size() >= 2 && t.front() == '(' && t.back() == ')') t = t.substr(1, t.size() - 2);
    else if (t.size() == 2 && t.back() == ')') t = t.substr(0, 1);
    if (t.size() == 1 && is_option_label(t[0], item)) return t[0];
    return std::nullopt;
}

// Labels named right after an "Answer:" marker.
inline std::vector<char> answer_marker_labels(const std::string& text, const Item& item) {
    std::vector<char> found;
    std::size_t pos = 0;
    while ((pos = text.find("Answer:", pos)) != std::string::npos) {
        std::size_t i = pos + 7;
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
        bool open = false;
        if (i < text.size() && text[i] == '(') {
            open = true;
            ++i;
        }
        if (i < text.size() && is_option_label(text[i], item)) {
            const char label = text[i];
            const char next = i + 1 < text.size() ? text[i + 1] : ' ';
            const bool closed = !open || next == ')';
            const bool bounded = open ? closed
                                      : !(std::isalnum(static_cast<unsigned char>(next)));
            if (closed && bounded) found.push_back(label);
        }
        pos += 7;
    }
    return found;
}

inline bool bounded_match(const std::string& text, const std::string& needle) {
    if (needle.empty()) return false;
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        const bool left_ok =
            pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
        const std::size_t end = pos + needle.size();
        const bool right_ok =
            end >= text.size() || !std::isalnum(static_cast<unsigned char>(text[end]));
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

}  // namespace detail

// Stage-1 extraction. Patterns run in priority order: "Answer: X" markers,
// then a final standalone "(X)" token, then option text appearing verbatim,
// then standalone label tokens. The first pattern that yields any candidates
// settles the outcome: exactly one distinct label extracts, more than one is
// ambiguous and falls through to the follow-up stage (nullopt here).
inline std::optional<char> rule_based_extract(const std::string& text, const Item& item) {
    const auto decide = [](const std::vector<char>& candidates) -> std::optional<std::optional<char>> {
        if (candidates.empty()) return std::nullopt;
        const std::set<char> distinct(candidates.begin(), candidates.end());
        if (distinct.size() == 1) return std::optional<char>(candidates.front());
        return std::optional<char>(std::nullopt);
    };

    if (auto verdict = decide(detail::answer_marker_labels(text, item))) return *verdict;

    const auto tokens = detail::tokens_of(text);
    if (!tokens.empty()) {
        const std::string last = detail::strip_token(tokens.back());
        if (last.size() >= 3 && last.front() == '(' && last.back() == ')') {
            if (auto label = detail::token_label(tokens.back(), item)) return label;
        }
    }

    {
        std::vector<char> candidates;
        for (const auto& opt : item.options)
            if (detail::bounded_match(text, opt.text)) candidates.push_back(opt.label);
        if (auto verdict = decide(candidates)) return *verdict;
    }

    {
        std::vector<char> candidates;
        for (const auto& t : tokens)
            if (auto label = detail::token_label(t, item)) candidates.push_back(*label);
        if (auto verdict = decide(candidates)) return *verdict;
    }
    return std::nullopt;
}

using QueryFn = std::function<std::string(const backend::BackendQuery&)>;

// Two-stage extraction: rules first, then one option-extraction follow-up
// through the backend. Ambiguity after both stages is Failed, never an error.
inline RawResponse extract_choice(const std::string& text, const Item& item,
                                  prompts::PromptMode mode, const prompts::PromptLibrary& lib,
                                  const QueryFn& query) {
    RawResponse out;
    out.item_id = item.id;
    out.mode = mode;
    out.text = text;
    if (auto label = rule_based_extract(text, item)) {
        out.extracted = label;
        out.method = ExtractionMethod::RuleBased;
        return out;
    }
    backend::BackendQuery q;
    q.item = &item;
    q.mode = mode;
    q.prompt = lib.render_extraction(text, item);
    q.extraction_followup = true;
    const std::string reply = query(q);
    out.followup_prompt = q.prompt;
    out.followup_raw = reply;
    if (auto label = rule_based_extract(reply, item)) {
        out.extracted = label;
        out.method = ExtractionMethod::FollowUpPrompt;
        return out;
    }
    out.method = ExtractionMethod::Failed;
    return out;
}

inline RawResponse extract_choice(const std::string& text, const Item& item,
                                  prompts::PromptMode mode, const prompts::PromptLibrary& lib,
                                  backend::ExamineeBackend& be) {
    return extract_choice(text, item, mode, lib,
                          [&](const backend::BackendQuery& q) { return be.query(q); });
}

// One transcript record per (item, mode). Follow-up fields present only when
// stage 2 ran.
struct TranscriptEntry {
    std::string item_id;
    std::string mode;
    std::string prompt;
    std::string raw;
    std::string method;
    std::optional<std::string> label;
    std::string timestamp;
    std::optional<std::string> extraction_prompt;
    std::optional<std::string> extraction_raw;
};

inline nlohmann::ordered_json entry_to_json(const TranscriptEntry& e) {
    nlohmann::ordered_json j;
    j["item_id"] = e.item_id;
    j["mode"] = e.mode;
    j["prompt"] = e.prompt;
    j["raw"] = e.raw;
    j["method"] = e.method;
    if (e.label) j["label"] = *e.label;
    j["timestamp"] = e.timestamp;
    if (e.extraction_prompt) j["extraction_prompt"] = *e.extraction_prompt;
    if (e.extraction_raw) j["extraction_raw"] = *e.extraction_raw;
    return j;
}

inline TranscriptEntry entry_from_json(const nlohmann::json& j) {
    TranscriptEntry e;
    e.item_id = j.at("item_id").get<std::string>();
    e.mode = j.at("mode").get<std::string>();
    e.prompt = j.at("prompt").get<std::string>();
    e.raw = j.at("raw").get<std::string>();
    e.method = j.at("method").get<std::string>();
    if (j.contains("label")) e.label = j.at("label").get<std::string>();
    e.timestamp = j.at("timestamp").get<std::string>();
    if (j.contains("extraction_prompt"))
        e.extraction_prompt = j.at("extraction_prompt").get<std::string>();
    if (j.contains("extraction_raw")) e.extraction_raw = j.at("extraction_raw").get<std::string>();
    return e;
}

inline std::string transcript_to_jsonl(const std::vector<TranscriptEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        out += entry_to_json(e).dump();
        out += '\n';
    }
    return out;
}

inline std::vector<TranscriptEntry> transcript_from_jsonl(const std::string& text) {
    std::vector<TranscriptEntry> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(entry_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

struct SessionOptions {
    std::uint64_t seed = 0;
    int max_attempts = 3;
    double backoff_initial_ms = 100.0;
    unsigned parallel = 4;
};

struct SessionResult {
    rasch::ResponseVector row;
    std::vector<TranscriptEntry> transcript;
    std::size_t rule_based = 0;
    std::size_t followups = 0;
    std::size_t failed = 0;
};

// Raised when the backend stays unreachable after retries; carries whatever
// transcript had been assembled so the caller can persist a partial artifact.
class SessionError : public BackendError {
  public:
    SessionError(const std::string& what, SessionResult partial)
        : BackendError(what), partial_(std::move(partial)) {}
    const SessionResult& partial() const { return partial_; }

  private:
    SessionResult partial_;
};

namespace detail {

inline QueryFn retrying_query(backend::ExamineeBackend& be, const SessionOptions& opts) {
    return [&be, opts](const backend::BackendQuery& q) {
        for (int attempt = 1;; ++attempt) {
            try {
                return be.query(q);
            } catch (const BackendError&) {
                if (attempt >= opts.max_attempts) throw;
                const auto delay = opts.backoff_initial_ms * static_cast<double>(1 << (attempt - 1));
                std::this_thread::sleep_for(
                    std::chrono::duration<double, std::milli>(delay));
            }
        }
    };
}

inline TranscriptEntry process_item(const Item& item, const prompts::PromptSpec& spec,
                                    const prompts::PromptLibrary& lib, const QueryFn& query) {
    backend::BackendQuery q;
    q.item = &item;
    q.mode = spec.mode;
    q.prompt = lib.render(item, spec);
    const std::string raw = query(q);
    const RawResponse response = extract_choice(raw, item, spec.mode, lib, query);
    TranscriptEntry e;
    e.item_id = item.id;
    e.mode = prompts::to_string(spec.mode);
    e.prompt = q.prompt;
    e.raw = raw;
    e.method = to_string(response.method);
    if (response.extracted) e.label = std::string(1, *response.extracted);
    e.timestamp = io::timestamp_utc();
    e.extraction_prompt = response.followup_prompt;
    e.extraction_raw = response.followup_raw;
    return e;
}

inline void tally(SessionResult& result, const Item& item, const TranscriptEntry& e) {
    const bool correct = e.label && (*e.label)[0] == item.correct_label;
    result.row.push_back({item.id, correct});
    if (e.method == "rule_based") ++result.rule_based;
    else if (e.method == "follow_up_prompt") ++result.followups;
    else ++result.failed;
}

}  // namespace detail

// Presents every item of a partition to the backend under one prompt spec
// and scores the extracted labels. Remote backends fan out over a bounded
// pool of workers with order-preserving assembly; mocks stay single-threaded
// so seeded runs reproduce exactly.
inline SessionResult run_session(const std::vector<Item>& items, const prompts::PromptSpec& spec,
                                 backend::ExamineeBackend& be, const prompts::PromptLibrary& lib,
                                 const SessionOptions& opts = {}) {
    if (items.empty()) throw std::invalid_argument("run_session: empty partition");
    be.begin_session(opts.seed);
    const QueryFn query = detail::retrying_query(be, opts);

    SessionResult result;
    const bool parallel =
        be.kind() == backend::BackendKind::RemoteLLM && opts.parallel > 1 && items.size() > 1;
    if (!parallel) {
        for (const auto& item : items) {
            TranscriptEntry e;
            try {
                e = detail::process_item(item, spec, lib, query);
            } catch (const BackendError& err) {
                throw SessionError(std::string("session aborted at item ") + item.id + ": " +
                                       err.what(),
                                   std::move(result));
            }
            detail::tally(result, item, e);
            result.transcript.push_back(std::move(e));
        }
        return result;
    }

    std::vector<std::optional<TranscriptEntry>> slots(items.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> aborted{false};
    std::exception_ptr first_error;
    std::mutex error_mu;

    const unsigned workers =
        std::min<unsigned>(opts.parallel, static_cast<unsigned>(items.size()));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (!aborted.load()) {
                const std::size_t i = next.fetch_add(1);
                if (i >= items.size()) return;
                try {
                    slots[i] = detail::process_item(items[i], spec, lib, query);
                } catch (...) {
                    std::lock_guard lock(error_mu);
                    if (!first_error) first_error = std::current_exception();
                    aborted.store(true);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();

    if (first_error) {
        SessionResult partial;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (!slots[i]) continue;
            detail::tally(partial, items[i], *slots[i]);
            partial.transcript.push_back(std::move(*slots[i]));
        }
        try {
            std::rethrow_exception(first_error);
        } catch (const BackendError& err) {
            throw SessionError(std::string("session aborted: ") + err.what(), std::move(partial));
        }
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        detail::tally(result, items[i], *slots[i]);
        result.transcript.push_back(std::move(*slots[i]));
    }
    return result;
}

// Rebuilds a scored row from a persisted transcript without touching any
// backend. Entries must cover the partition exactly, same mode throughout.
inline SessionResult replay_session(const std::vector<Item>& items,
                                    const prompts::PromptSpec& spec,
                                    const std::vector<TranscriptEntry>& entries) {
    if (items.empty()) throw std::invalid_argument("replay_session: empty partition");
    const std::string mode = prompts::to_string(spec.mode);
    std::map<std::string, const TranscriptEntry*> by_item;
    for (const auto& e : entries)
        if (e.mode == mode) by_item[e.item_id] = &e;
    SessionResult result;
    for (const auto& item : items) {
        const auto it = by_item.find(item.id);
        if (it == by_item.end())
            throw ValidationError("transcript is missing item " + item.id + " for mode " + mode);
        detail::tally(result, item, *it->second);
        result.transcript.push_back(*it->second);
    }
    return result;
}

}  // namespace gradescale::harness
