// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Completion sources: an OpenAI-compatible chat-completions client for real
// runs and a deterministic fixture-backed simulator for tests, behind one
// endpoint interface with retry and bounded-concurrency fan-out.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mathrl/corpus.hpp"

namespace mathrl::inference {

struct SamplingParams {
    double temperature = 0.6;
    double top_p = 0.95;
    long long max_tokens = 16384;
    int n = 1;
    std::optional<std::uint64_t> seed;

    void validate() const;
};

struct PromptTemplate {
    std::string system_prompt;
    std::string user_template = "{statement}"; // placeholder exactly once

    void validate() const;
    std::string render(std::string_view statement) const;
};

struct Completion {
    std::string text;
    long long token_count = 0;
    bool truncated = false;          // generation hit max_tokens; not an error
    std::optional<double> logprob;   // sequence log-probability when supplied
};

struct GenerationError {
    // "transport": connection-level failure; "http": non-2xx status;
    // "protocol": unusable response body. Transport and retryable HTTP
    // statuses (408, 429, 5xx) are retried; the rest are not.
    std::string kind;
    int status = 0;
    std::string message;

    bool retryable() const;
};

struct AttemptResult {
    std::vector<Completion> completions;
    std::optional<GenerationError> error;
};

class Endpoint {
  public:
    virtual ~Endpoint() = default;
    virtual std::string name() const = 0;
    virtual AttemptResult attempt(const std::string& prompt_id,
                                  const std::string& system_prompt,
                                  const std::string& user_prompt,
                                  const SamplingParams& params) = 0;
};

struct RetryPolicy {
    int max_retries = 3;
    int base_delay_ms = 1000;
    double factor = 2.0;
    bool jitter = true;
};

// Raised once retries are exhausted (or on the first non-retryable error).
class EndpointError : public std::runtime_error {
  public:
    EndpointError(const std::string& prompt_id, GenerationError err, int retries_used);
    const GenerationError& error() const { return err_; }
    int retries_used() const { return retries_used_; }

  private:
    GenerationError err_;
    int retries_used_;
};

struct GenerateResult {
    std::vector<Completion> completions; // exactly params.n on success
    int retries_used = 0;
    double latency_ms = 0.0; // wall clock; logged, never written to artifacts
};

// Renders the prompt, calls the endpoint, retries transient failures with
// capped exponential backoff, and verifies the completion count.
// jitter_rng may be null (no jitter even when the policy asks for it).
GenerateResult generate(const corpus::ProblemRecord& problem, const PromptTemplate& tmpl,
                        const SamplingParams& params, Endpoint& endpoint,
                        const RetryPolicy& retry = {},
                        std::mt19937_64* jitter_rng = nullptr);

// Deterministic completions from a fixture file, one JSON object per line:
// {"id": ..., "completions": [{"text": ..., "logprob": ...?}, ...]}.
// Each request consumes completions round-robin per problem id. Token
// counts come from the configured tokenizer; completions longer than
// params.max_tokens are cut at the token boundary and flagged truncated.
class SimulatedEndpoint final : public Endpoint {
  public:
    SimulatedEndpoint(const std::filesystem::path& fixture,
                      const corpus::Tokenizer& tokenizer);

    std::string name() const override;
    AttemptResult attempt(const std::string& prompt_id, const std::string& system_prompt,
                          const std::string& user_prompt,
                          const SamplingParams& params) override;

    // Fails the next `count` attempts for a prompt with `error` before
    // serving normally; exercises the retry path.
    void plant_failures(const std::string& prompt_id, int count, GenerationError error);

    // Holds each attempt open for `ms` so concurrent requests overlap.
    void set_artificial_delay_ms(int ms) { delay_ms_ = ms; }

    // High-water mark of simultaneously open attempts.
    int max_concurrent_observed() const;

  private:
    struct Entry {
        std::vector<Completion> completions;
        std::size_t cursor = 0;
        int planted_failures = 0;
        GenerationError planted_error;
    };

    const corpus::Tokenizer& tokenizer_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, Entry> entries_;
    int delay_ms_ = 0;
    int in_flight_ = 0;
    int high_water_ = 0;
};

// OpenAI-compatible chat-completions client (POST /v1/chat/completions).
class HttpEndpoint final : public Endpoint {
  public:
    struct Options {
        std::string base_url;  // scheme://host[:port]
        std::string api_key;   // sent as a bearer token when non-empty
        std::string model;
        int timeout_sec = 300;
        bool debug_log = false; // logs request/response bodies, key redacted
    };

    // Reads MATHRL_ENDPOINT_URL, MATHRL_API_KEY, MATHRL_MODEL.
    static Options from_env();

    HttpEndpoint(Options options, const corpus::Tokenizer& tokenizer);
    ~HttpEndpoint() override;

    std::string name() const override;
    AttemptResult attempt(const std::string& prompt_id, const std::string& system_prompt,
                          const std::string& user_prompt,
                          const SamplingParams& params) override;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// "sim:<fixture path>" builds a SimulatedEndpoint; anything starting with
// http:// or https:// builds an HttpEndpoint with env credentials.
std::unique_ptr<Endpoint> make_endpoint(std::string_view spec,
                                        const corpus::Tokenizer& tokenizer);

struct BatchItem {
    std::optional<GenerateResult> result;  // set on success
    std::optional<std::string> error;      // set on failure
};

// Fans problems out over up to max_in_flight worker threads; items land at
// their problem's input index, so aggregation is order-independent.
// Per-problem failures are recorded, not thrown.
std::vector<BatchItem> generate_batch(std::span<const corpus::ProblemRecord> problems,
                                      const PromptTemplate& tmpl,
                                      const SamplingParams& params, Endpoint& endpoint,
                                      int max_in_flight, const RetryPolicy& retry = {});

} // namespace mathrl::inference
