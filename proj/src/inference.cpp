// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "mathrl/inference.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "mathrl/errors.hpp"
#include "mathrl/log.hpp"

namespace mathrl::inference {

using json = nlohmann::ordered_json;

void SamplingParams::validate() const {
    if (temperature < 0.0) throw ValidationError("temperature must be non-negative");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ValidationError("top_p must lie in (0, 1]");
    if (max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
    if (n < 1) throw ValidationError("n must be >= 1");
}

static constexpr std::string_view kPlaceholder = "{statement}";

void PromptTemplate::validate() const {
    const auto first = user_template.find(kPlaceholder);
    if (first == std::string::npos) {
        throw ValidationError("user template lacks the {statement} placeholder");
    }
    if (user_template.find(kPlaceholder, first + 1) != std::string::npos) {
        throw ValidationError("user template must contain {statement} exactly once");
    }
}

std::string PromptTemplate::render(std::string_view statement) const {
    validate();
    std::string out = user_template;
    out.replace(out.find(kPlaceholder), kPlaceholder.size(), statement);
    return out;
}

bool GenerationError::retryable() const {
    if (kind == "transport") return true;
    if (kind == "http") return status == 408 || status == 429 || status >= 500;
    return false;
}

namespace {

std::string describe(const GenerationError& err) {
    std::string out = err.kind;
    if (err.status != 0) out += " " + std::to_string(err.status);
    if (!err.message.empty()) out += ": " + err.message;
    return out;
}

} // namespace

EndpointError::EndpointError(const std::string& prompt_id, GenerationError err,
                             int retries_used)
    : std::runtime_error("generation failed for \"" + prompt_id + "\" after " +
                         std::to_string(retries_used) + " retries (" + describe(err) + ")"),
      err_(std::move(err)), retries_used_(retries_used) {}

// ---------------------------------------------------------------------------
// Retry wrapper
// ---------------------------------------------------------------------------

GenerateResult generate(const corpus::ProblemRecord& problem, const PromptTemplate& tmpl,
                        const SamplingParams& params, Endpoint& endpoint,
                        const RetryPolicy& retry, std::mt19937_64* jitter_rng) {
    params.validate();
    const std::string user_prompt = tmpl.render(problem.statement);

    constexpr double kMaxDelayMs = 30000.0;
    const auto start = std::chrono::steady_clock::now();
    int retries_used = 0;
    double delay_ms = static_cast<double>(retry.base_delay_ms);

    for (;;) {
        AttemptResult attempt =
            endpoint.attempt(problem.id, tmpl.system_prompt, user_prompt, params);
        if (!attempt.error) {
            if (std::cmp_not_equal(attempt.completions.size(), params.n)) {
                GenerationError err{"protocol", 0,
                                    "expected " + std::to_string(params.n) +
                                        " completions, got " +
                                        std::to_string(attempt.completions.size())};
                throw EndpointError(problem.id, std::move(err), retries_used);
            }
            GenerateResult result;
            result.completions = std::move(attempt.completions);
            result.retries_used = retries_used;
            result.latency_ms = std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - start)
                                    .count();
            log::debug("generated " + std::to_string(result.completions.size()) +
                       " completions for \"" + problem.id + "\" (" +
                       std::to_string(retries_used) + " retries)");
            return result;
        }
        if (!attempt.error->retryable() || retries_used >= retry.max_retries) {
            throw EndpointError(problem.id, std::move(*attempt.error), retries_used);
        }
        double sleep_ms = std::min(delay_ms, kMaxDelayMs);
        if (retry.jitter && jitter_rng != nullptr) {
            const double u =
                static_cast<double>((*jitter_rng)() >> 11) * 0x1.0p-53; // [0, 1)
            sleep_ms *= 0.5 + 0.5 * u;
        }
        log::warn("attempt for \"" + problem.id + "\" failed (" + describe(*attempt.error) +
                  "), retrying in " + std::to_string(sleep_ms) + " ms");
        if (sleep_ms > 0.0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<long long>(sleep_ms)));
        }
        delay_ms *= retry.factor;
        ++retries_used;
    }
}

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

namespace {

struct SimFixtureLine {
    std::string id;
    std::vector<std::pair<std::string, std::optional<double>>> completions;
};

} // namespace

} // namespace mathrl::inference

namespace mathrl::corpus {

// Fixture codec lives here so the generic JSONL reader can parse it.
template <>
struct RecordCodec<inference::SimFixtureLine> {
    static inference::SimFixtureLine parse(const json& j) {
        if (!j.is_object()) throw ValidationError("fixture line must be a JSON object");
        inference::SimFixtureLine line;
        line.id = detail::require_string(j, "id", /*allow_empty=*/false);
        const json& arr = detail::require_field(j, "completions");
        if (!arr.is_array()) {
            throw ValidationError("field \"completions\" must be an array");
        }
        for (const auto& cj : arr) {
            if (!cj.is_object()) {
                throw ValidationError("completions must be JSON objects");
            }
            std::optional<double> logprob;
            if (auto it = cj.find("logprob"); it != cj.end() && !it->is_null()) {
                if (!it->is_number()) {
                    throw ValidationError("field \"logprob\" must be a number");
                }
                logprob = it->get<double>();
            }
            line.completions.emplace_back(detail::require_string(cj, "text"), logprob);
        }
        return line;
    }
    static json dump(const inference::SimFixtureLine& line) {
        json j = json::object();
        j["id"] = line.id;
        json arr = json::array();
        for (const auto& [text, logprob] : line.completions) {
            json cj = json::object();
            cj["text"] = text;
            if (logprob) cj["logprob"] = *logprob;
            arr.push_back(std::move(cj));
        }
        j["completions"] = std::move(arr);
        return j;
    }
};

} // namespace mathrl::corpus

namespace mathrl::inference {

SimulatedEndpoint::SimulatedEndpoint(const std::filesystem::path& fixture,
                                     const corpus::Tokenizer& tokenizer)
    : tokenizer_(tokenizer) {
    auto parsed =
        corpus::read_records<SimFixtureLine>(fixture, corpus::ErrorPolicy::fail_fast);
    for (auto& line : parsed.records) {
        Entry entry;
        for (auto& [text, logprob] : line.completions) {
            Completion c;
            c.token_count = static_cast<long long>(tokenizer_.count(text));
            c.text = std::move(text);
            c.logprob = logprob;
            entry.completions.push_back(std::move(c));
        }
        if (!entries_.emplace(std::move(line.id), std::move(entry)).second) {
            throw ValidationError("duplicate fixture id in " + fixture.string());
        }
    }
}

std::string SimulatedEndpoint::name() const { return "simulator"; }

void SimulatedEndpoint::plant_failures(const std::string& prompt_id, int count,
                                       GenerationError error) {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(prompt_id);
    if (it == entries_.end()) throw ValidationError("unknown prompt id " + prompt_id);
    it->second.planted_failures = count;
    it->second.planted_error = std::move(error);
}

int SimulatedEndpoint::max_concurrent_observed() const {
    std::lock_guard lock(mutex_);
    return high_water_;
}

AttemptResult SimulatedEndpoint::attempt(const std::string& prompt_id,
                                         const std::string& system_prompt,
                                         const std::string& user_prompt,
                                         const SamplingParams& params) {
    (void)system_prompt;
    (void)user_prompt;
    {
        std::lock_guard lock(mutex_);
        ++in_flight_;
        high_water_ = std::max(high_water_, in_flight_);
    }
    // Holding the attempt open (outside the lock) lets the concurrency probe
    // observe real overlap under threaded callers.
    if (delay_ms_ > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
    }

    std::lock_guard lock(mutex_);
    --in_flight_;
    AttemptResult result;
    auto it = entries_.find(prompt_id);
    if (it == entries_.end()) {
        result.error = GenerationError{"protocol", 0, "unknown problem id " + prompt_id};
        return result;
    }
    Entry& entry = it->second;
    if (entry.completions.empty()) {
        result.error =
            GenerationError{"protocol", 0, "no fixture completions for " + prompt_id};
        return result;
    }
    if (entry.planted_failures > 0) {
        --entry.planted_failures;
        result.error = entry.planted_error;
        return result;
    }
    for (int i = 0; i < params.n; ++i) {
        Completion c = entry.completions[entry.cursor % entry.completions.size()];
        ++entry.cursor;
        if (c.token_count > params.max_tokens) {
            const auto head = tokenizer_.prefix(
                c.text, static_cast<std::size_t>(params.max_tokens));
            c.text = std::string(head);
            c.token_count = static_cast<long long>(tokenizer_.count(c.text));
            c.truncated = true;
        }
        result.completions.push_back(std::move(c));
    }
    return result;
}

// ---------------------------------------------------------------------------
// HTTP client
// ---------------------------------------------------------------------------

struct HttpEndpoint::Impl {
    Options options;
    const corpus::Tokenizer& tokenizer;
    httplib::Client client;

    Impl(Options opts, const corpus::Tokenizer& tok)
        : options(std::move(opts)), tokenizer(tok), client(options.base_url) {
        client.set_connection_timeout(options.timeout_sec, 0);
        client.set_read_timeout(options.timeout_sec, 0);
        client.set_write_timeout(options.timeout_sec, 0);
    }
};

HttpEndpoint::Options HttpEndpoint::from_env() {
    Options o;
    if (const char* url = std::getenv("MATHRL_ENDPOINT_URL")) o.base_url = url;
    if (const char* key = std::getenv("MATHRL_API_KEY")) o.api_key = key;
    if (const char* model = std::getenv("MATHRL_MODEL")) o.model = model;
    return o;
}

HttpEndpoint::HttpEndpoint(Options options, const corpus::Tokenizer& tokenizer) {
    if (options.base_url.empty()) {
        throw ValidationError("endpoint URL missing (set MATHRL_ENDPOINT_URL)");
    }
    if (options.model.empty()) {
        throw ValidationError("model name missing (set MATHRL_MODEL)");
    }
    impl_ = std::make_unique<Impl>(std::move(options), tokenizer);
}

HttpEndpoint::~HttpEndpoint() = default;

std::string HttpEndpoint::name() const { return impl_->options.base_url; }

AttemptResult HttpEndpoint::attempt(const std::string& prompt_id,
                                    const std::string& system_prompt,
                                    const std::string& user_prompt,
                                    const SamplingParams& params) {
    json body;
    body["model"] = impl_->options.model;
    body["messages"] = json::array({json{{"role", "system"}, {"content", system_prompt}},
                                    json{{"role", "user"}, {"content", user_prompt}}});
    body["temperature"] = params.temperature;
    body["top_p"] = params.top_p;
    body["max_tokens"] = params.max_tokens;
    body["n"] = params.n;
    if (params.seed) body["seed"] = *params.seed;

    httplib::Headers headers;
    if (!impl_->options.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + impl_->options.api_key);
    }
    if (impl_->options.debug_log) {
        log::debug("POST /v1/chat/completions for \"" + prompt_id +
                   "\" (authorization redacted): " + body.dump());
    }

    AttemptResult out;
    auto res = impl_->client.Post("/v1/chat/completions", headers, body.dump(),
                                  "application/json");
    if (!res) {
        out.error = GenerationError{"transport", 0, httplib::to_string(res.error())};
        return out;
    }
    if (impl_->options.debug_log) {
        log::debug("response " + std::to_string(res->status) + ": " + res->body);
    }
    if (res->status != 200) {
        out.error = GenerationError{"http", res->status, res->body.substr(0, 512)};
        return out;
    }

    try {
        const json reply = json::parse(res->body);
        const auto& choices = reply.at("choices");
        std::optional<long long> usage_completion_tokens;
        if (reply.contains("usage") && reply["usage"].contains("completion_tokens")) {
            usage_completion_tokens = reply["usage"]["completion_tokens"].get<long long>();
        }
        for (const auto& choice : choices) {
            Completion c;
            c.text = choice.at("message").at("content").get<std::string>();
            c.truncated = choice.contains("finish_reason") &&
                          !choice["finish_reason"].is_null() &&
                          choice["finish_reason"].get<std::string>() == "length";
            // Reported usage is only per-completion when n = 1; otherwise
            // fall back to the configured tokenizer.
            if (params.n == 1 && usage_completion_tokens) {
                c.token_count = *usage_completion_tokens;
            } else {
                c.token_count = static_cast<long long>(impl_->tokenizer.count(c.text));
            }
            if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
                choice["logprobs"].contains("content") &&
                choice["logprobs"]["content"].is_array()) {
                double sum = 0.0;
                for (const auto& tok : choice["logprobs"]["content"]) {
                    sum += tok.at("logprob").get<double>();
                }
                c.logprob = sum;
            }
            out.completions.push_back(std::move(c));
        }
    } catch (const std::exception& e) {
        out = AttemptResult{};
        out.error = GenerationError{"protocol", 0,
                                    std::string("unparseable response: ") + e.what()};
    }
    return out;
}

std::unique_ptr<Endpoint> make_endpoint(std::string_view spec,
                                        const corpus::Tokenizer& tokenizer) {
    if (spec.starts_with("sim:")) {
        return std::make_unique<SimulatedEndpoint>(std::filesystem::path(spec.substr(4)),
                                                   tokenizer);
    }
    if (spec.starts_with("http://") || spec.starts_with("https://")) {
        auto options = HttpEndpoint::from_env();
        options.base_url = std::string(spec);
        return std::make_unique<HttpEndpoint>(std::move(options), tokenizer);
    }
    throw ValidationError("endpoint \"" + std::string(spec) +
                          "\" must be sim:<fixture> or an http(s) URL");
}

// ---------------------------------------------------------------------------
// Bounded-concurrency fan-out
// ---------------------------------------------------------------------------

std::vector<BatchItem> generate_batch(std::span<const corpus::ProblemRecord> problems,
                                      const PromptTemplate& tmpl,
                                      const SamplingParams& params, Endpoint& endpoint,
                                      int max_in_flight, const RetryPolicy& retry) {
    params.validate();
    tmpl.validate();
    if (max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");

    std::vector<BatchItem> items(problems.size());
    std::atomic<std::size_t> next{0};
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), problems.size());

    auto run_worker = [&](std::size_t worker_index) {
        // Jitter only perturbs retry timing, never results.
        std::mt19937_64 jitter_rng(0x9E3779B97F4A7C15ULL ^ worker_index);
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= problems.size()) return;
            try {
                items[i].result =
                    generate(problems[i], tmpl, params, endpoint, retry, &jitter_rng);
            } catch (const std::exception& e) {
                items[i].error = e.what();
            }
        }
    };

    if (workers <= 1) {
        run_worker(0);
        return items;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run_worker, w);
    for (auto& t : pool) t.join();
    return items;
}

} // namespace mathrl::inference
