#pragma once

#include "lsfs/clock.hpp"
#include "lsfs/llm_client.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lsfs {

enum class ParamKind { String, Integer, Path, Duration, Timestamp, Enum, StringList };

std::string_view to_string(ParamKind kind);

struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::String;
    bool required = false;
    std::vector<std::string> enum_values;
    /// Lower bound for Integer and Duration values.
    std::optional<std::int64_t> min;
    std::string description;
};

/// String, Path, Enum -> string; Integer, Duration (seconds), Timestamp (ms UTC)
/// -> int64; StringList -> vector.
using ArgValue = std::variant<std::string, std::int64_t, std::vector<std::string>>;

struct ApiCall {
    std::string api_name;
    std::map<std::string, ArgValue> args;
    std::string raw_prompt;
    std::optional<double> confidence;

    bool has(const std::string& name) const { return args.count(name) != 0; }
    std::optional<std::string> str(const std::string& name) const;
    std::optional<std::int64_t> integer(const std::string& name) const;
    std::optional<std::vector<std::string>> list(const std::string& name) const;

    /// Equal api name and arguments; prompt and confidence are not compared.
    bool same_call(const ApiCall& other) const { return api_name == other.api_name && args == other.args; }
};

nlohmann::json to_json(const ArgValue& value);
nlohmann::json to_json(const ApiCall& call);

struct ApiSchema {
    std::string api_name;
    std::string description;
    std::vector<ParamSpec> params;
    bool danger = false;
    /// Rules spanning several parameters; appends one message per violation.
    std::function<void(const ApiCall&, std::vector<std::string>&)> cross_check;

    const ParamSpec* find(std::string_view name) const;
};

class ApiCatalog {
public:
    explicit ApiCatalog(std::vector<ApiSchema> schemas);

    const ApiSchema* find(std::string_view api_name) const;
    const ApiSchema& at(std::string_view api_name) const;
    const std::vector<ApiSchema>& schemas() const { return schemas_; }

    /// The four user-facing APIs plus the direct syscalls.
    static const ApiCatalog& standard();

    /// Text listing of every API and parameter, embedded in the system prompt.
    std::string describe() const;

private:
    std::vector<ApiSchema> schemas_;
};

/// Danger flag from the schema; file_join counts as destructive unless its
/// condition is "new".
bool is_danger(const ApiCall& call, const ApiCatalog& catalog = ApiCatalog::standard());

/// Throws UnknownApi, or SchemaViolation with details.violations.
void validate(const ApiCall& call, const ApiCatalog& catalog = ApiCatalog::standard());

/// Turns loosely typed values into canonical ones. Relative dates resolve
/// against the clock.
class Normalizer {
public:
    explicit Normalizer(std::shared_ptr<const Clock> clock) : clock_(std::move(clock)) {}

    /// Throws UnknownApi or SchemaViolation; the result always validates.
    ApiCall build(const std::string& api_name, const nlohmann::json& args, const std::string& raw_prompt,
                  const ApiCatalog& catalog = ApiCatalog::standard()) const;
    ApiCall normalize(const ApiCall& call, const ApiCatalog& catalog = ApiCatalog::standard()) const;

    std::int64_t duration_seconds(const nlohmann::json& value) const;
    std::int64_t timestamp_ms(const nlohmann::json& value) const;
    std::int64_t integer(const nlohmann::json& value) const;

private:
    std::shared_ptr<const Clock> clock_;
};

/// Prompt to ApiCall through the LLM. Never executes anything.
class Parser {
public:
    Parser(std::shared_ptr<const LlmClient> llm, std::shared_ptr<const Clock> clock,
           const ApiCatalog& catalog = ApiCatalog::standard());

    /// Errors (UnparseableOutput, UnknownApi, SchemaViolation) carry
    /// details.raw_output.
    ApiCall parse(const std::string& prompt) const;
    /// The decode/normalize/validate half of parse, for a response in hand.
    ApiCall decode(std::string_view raw_output, const std::string& prompt) const;

    std::string system_prompt() const;
    const ApiCatalog& catalog() const { return catalog_; }
    const Normalizer& normalizer() const { return normalizer_; }

private:
    std::shared_ptr<const LlmClient> llm_;
    std::shared_ptr<const Clock> clock_;
    const ApiCatalog& catalog_;
    Normalizer normalizer_;
};

/// `{"api": ..., "args": {...}}`, possibly wrapped in prose or a code fence,
/// or the comma-separated form `api, key=value, key=a|b`.
/// Returns (api, args) or throws UnparseableOutput.
std::pair<std::string, nlohmann::json> decode_llm_output(std::string_view raw);

struct ParserFixture {
    std::string prompt;
    ApiCall expected;
};

/// JSON lines of {prompt, expected: {api, args}}. Every expected call is
/// normalized and validated on load.
std::vector<ParserFixture> load_fixtures(const std::filesystem::path& path, const Normalizer& normalizer);

struct AccuracyRow {
    std::string api_name;
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct AccuracyReport {
    std::string model;
    std::vector<AccuracyRow> rows;
    /// Prompts whose parse did not match, with the reason.
    std::vector<std::pair<std::string, std::string>> misses;

    double macro_average() const;
    /// api, model, total, correct, accuracy; a final "average" row.
    std::string to_tsv() const;
};

AccuracyReport evaluate_accuracy(const Parser& parser, const std::vector<ParserFixture>& fixtures,
                                 const std::string& model_name);

} // namespace lsfs
