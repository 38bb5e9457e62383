#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gradescale/cohort.hpp"
#include "gradescale/item_bank.hpp"
#include "gradescale/prompts.hpp"
#include "gradescale/rasch.hpp"
#include "gradescale/types.hpp"

namespace gradescale::backend {

struct SamplingSettings {
    double temperature = 0.0;
    double top_p = 0.95;
    int max_tokens = 2048;
};

enum class BackendKind { Mock, Scripted, RemoteLLM };

inline std::string to_string(BackendKind k) {
    switch (k) {
        case BackendKind::Mock: return "mock";
        case BackendKind::Scripted: return "scripted";
        case BackendKind::RemoteLLM: return "remote";
    }
    throw std::logic_error("bad BackendKind");
}

// What the harness knows about one completion request. item is always the
// item under test, also for extraction follow-ups.
struct BackendQuery {
    const Item* item = nullptr;
    prompts::PromptMode mode = prompts::PromptMode::Unenforced;
    std::string prompt;
    bool extraction_followup = false;
};

// Produces free-text answers for prompts. query() funnels every call through
// one place so tests can count backend traffic; subclasses implement
// complete(). Mocks must be deterministic given (item id, mode) once seeded.
class ExamineeBackend {
  public:
    virtual ~ExamineeBackend() = default;

    virtual BackendKind kind() const = 0;
    virtual std::string name() const = 0;
    virtual void begin_session(std::uint64_t) {}

    std::string query(const BackendQuery& q) {
        ++total_calls_;
        ++calls_;
        return complete(q);
    }

    std::uint64_t calls() const { return calls_.load(); }

    static std::uint64_t total_calls() { return total_calls_.load(); }
    static void reset_total_calls() { total_calls_.store(0); }

  protected:
    virtual std::string complete(const BackendQuery& q) = 0;

  private:
    std::atomic<std::uint64_t> calls_{0};
    inline static std::atomic<std::uint64_t> total_calls_{0};
};

class AlwaysCorrectMock : public ExamineeBackend {
  public:
    BackendKind kind() const override { return BackendKind::Mock; }
    std::string name() const override { return "mock-correct"; }

  protected:
    std::string complete(const BackendQuery& q) override {
        return std::string("Answer: ") + q.item->correct_label;
    }
};

class FixedLabelMock : public ExamineeBackend {
  public:
    explicit FixedLabelMock(char label) : label_(label) {}
    BackendKind kind() const override { return BackendKind::Mock; }
    std::string name() const override { return std::string("mock-fixed-") + label_; }

  protected:
    std::string complete(const BackendQuery&) override {
        return std::string("Answer: ") + label_;
    }

  private:
    char label_;
};

namespace detail {

inline std::mt19937_64 item_stream(std::uint64_t seed, const Item& item,
                                   prompts::PromptMode mode) {
    const auto key = sim::hash_str(item.id) ^ (0x51ed270b7a03f2e5ULL * (static_cast<std::uint64_t>(mode) + 1));
    return std::mt19937_64(sim::substream_seed(seed, key));
}

}  // namespace detail

// Picks uniformly among the item's options; stream keyed by (item id, mode).
class UniformRandomMock : public ExamineeBackend {
  public:
    BackendKind kind() const override { return BackendKind::Mock; }
    std::string name() const override { return "mock-random"; }
    void begin_session(std::uint64_t seed) override { seed_ = seed; }

  protected:
    std::string complete(const BackendQuery& q) override {
        auto g = detail::item_stream(seed_, *q.item, q.mode);
        const auto n = q.item->options.size();
        const auto pick = std::min(static_cast<std::size_t>(sim::u01(g) * static_cast<double>(n)), n - 1);
        return std::string("Answer: ") + q.item->options[pick].label;
    }

  private:
    std::uint64_t seed_ = 0;
};

// Answers like a Rasch examinee at a fixed ability: correct with probability
// e^(theta-b)/(1+e^(theta-b)), otherwise a deterministic wrong option.
// Difficulties are supplied per item id since the raw item carries none.
class RaschStudentMock : public ExamineeBackend {
  public:
    RaschStudentMock(double theta, std::map<std::string, double> difficulty_by_item)
        : theta_(theta), difficulty_by_item_(std::move(difficulty_by_item)) {}

    BackendKind kind() const override { return BackendKind::Mock; }
    std::string name() const override { return "mock-rasch"; }
    void begin_session(std::uint64_t seed) override { seed_ = seed; }
    double theta() const { return theta_; }

  protected:
    std::string complete(const BackendQuery& q) override {
        const auto it = difficulty_by_item_.find(q.item->id);
        if (it == difficulty_by_item_.end())
            throw BackendError("mock-rasch: no difficulty for item " + q.item->id);
        auto g = detail::item_stream(seed_, *q.item, q.mode);
        const double p = rasch::response_probability(theta_, rasch::Difficulty{it->second});
        char label;
        if (sim::u01(g) < p) {
            label = q.item->correct_label;
        } else {
            std::vector<char> wrong;
            for (const auto& opt : q.item->options)
                if (opt.label != q.item->correct_label) wrong.push_back(opt.label);
            const auto pick = std::min(
                static_cast<std::size_t>(sim::u01(g) * static_cast<double>(wrong.size())),
                wrong.size() - 1);
            label = wrong[pick];
        }
        return std::string("Answer: ") + label;
    }

  private:
    double theta_;
    std::map<std::string, double> difficulty_by_item_;
    std::uint64_t seed_ = 0;
};

// Plays back caller-supplied responses; the function form may throw to model
// transport faults in tests.
class ScriptedMock : public ExamineeBackend {
  public:
    using Script = std::function<std::string(const BackendQuery&)>;

    explicit ScriptedMock(Script script) : script_(std::move(script)) {}
    explicit ScriptedMock(std::string fixed)
        : script_([text = std::move(fixed)](const BackendQuery&) { return text; }) {}

    // Keyed lookup: "<item_id>|<mode>" for solution prompts and
    // "<item_id>|extraction" for follow-ups.
    explicit ScriptedMock(std::map<std::string, std::string> by_key)
        : script_([table = std::move(by_key)](const BackendQuery& q) {
              const std::string key =
                  q.item->id + "|" +
                  (q.extraction_followup ? std::string("extraction") : prompts::to_string(q.mode));
              const auto it = table.find(key);
              if (it == table.end()) throw BackendError("scripted backend: no entry for " + key);
              return it->second;
          }) {}

    BackendKind kind() const override { return BackendKind::Scripted; }
    std::string name() const override { return "scripted"; }

  protected:
    std::string complete(const BackendQuery& q) override { return script_(q); }

  private:
    Script script_;
};

inline constexpr const char* kCredentialEnvVar = "GRADESCALE_API_KEY";

struct RemoteConfig {
    std::string endpoint;
    SamplingSettings sampling;
    std::string credential_env = kCredentialEnvVar;
    int timeout_seconds = 120;
};

// Talks to a single HTTP completion endpoint. Request and reply are JSON:
// {"prompt", "temperature", "top_p", "max_tokens"} in, {"completion"} out.
// Transport and protocol faults surface as BackendError; retry policy lives
// in the session runner.
class RemoteLLMBackend : public ExamineeBackend {
  public:
    explicit RemoteLLMBackend(RemoteConfig config) : config_(std::move(config)) {
        const auto scheme_end = config_.endpoint.find("://");
        if (scheme_end == std::string::npos)
            throw std::invalid_argument("remote endpoint must be a http(s) URL: " +
                                        config_.endpoint);
        const auto path_start = config_.endpoint.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            base_ = config_.endpoint;
            path_ = "/";
        } else {
            base_ = config_.endpoint.substr(0, path_start);
            path_ = config_.endpoint.substr(path_start);
        }
    }

    BackendKind kind() const override { return BackendKind::RemoteLLM; }
    std::string name() const override { return "remote"; }
    const RemoteConfig& config() const { return config_; }

  protected:
    std::string complete(const BackendQuery& q) override {
        nlohmann::json body = {
            {"prompt", q.prompt},
            {"temperature", config_.sampling.temperature},
            {"top_p", config_.sampling.top_p},
            {"max_tokens", config_.sampling.max_tokens},
        };
        httplib::Client client(base_);
        client.set_connection_timeout(config_.timeout_seconds);
        client.set_read_timeout(config_.timeout_seconds);
        httplib::Headers headers;
        if (const char* token = std::getenv(config_.credential_env.c_str()); token && *token)
            headers.emplace("Authorization", std::string("Bearer ") + token);
        auto res = client.Post(path_, headers, body.dump(), "application/json");
        if (!res)
            throw BackendError("remote backend: transport failure contacting " + config_.endpoint);
        if (res->status != 200)
            throw BackendError("remote backend: HTTP " + std::to_string(res->status) + " from " +
                               config_.endpoint);
        try {
            const auto reply = nlohmann::json::parse(res->body);
            return reply.at("completion").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("remote backend: malformed reply: ") + e.what());
        }
    }

  private:
    RemoteConfig config_;
    std::string base_;
    std::string path_;
};

}  // namespace gradescale::backend
