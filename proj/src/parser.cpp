#include "lsfs/parser.hpp"

#include "lsfs/error.hpp"
#include "lsfs/util.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <regex>
#include <set>

namespace lsfs {

namespace {

constexpr std::int64_t kDayMs = 86'400'000;

ParamSpec param(std::string name, ParamKind kind, bool required, std::string description,
                std::vector<std::string> enum_values = {}, std::optional<std::int64_t> min = std::nullopt) {
    return {std::move(name), kind, required, std::move(enum_values), min, std::move(description)};
}

ParamSpec directory_param(bool required) {
    return param("directory", ParamKind::String, required,
                 required ? "directory holding the file" : "directory to search; omit to search everywhere");
}

ParamSpec condition_param() {
    return param("condition", ParamKind::Enum, false, "how several keywords combine", {"and", "or"});
}

void need_condition(const ApiCall& call, std::vector<std::string>& out) {
    const auto kws = call.list("keywords");
    if (kws && kws->size() > 1 && !call.has("condition")) {
        out.push_back("condition: required when several keywords are given");
    }
}

void require(const ApiCall& call, std::initializer_list<const char*> names, const std::string& why,
             std::vector<std::string>& out) {
    for (const auto* n : names) {
        if (!call.has(n)) {
            out.push_back(std::string(n) + ": required " + why);
        }
    }
}

std::vector<ApiSchema> standard_schemas() {
    std::vector<ApiSchema> s;

    s.push_back({"retrieve_summary",
                 "find files by keywords, by meaning, or both, and summarize each match",
                 {param("mode", ParamKind::Enum, true, "search style", {"keyword", "semantic", "integrated"}),
                  param("keywords", ParamKind::StringList, false, "keywords to match in name or content"),
                  condition_param(),
                  param("query", ParamKind::String, false, "description of the wanted content"),
                  directory_param(false),
                  param("n", ParamKind::Integer, false, "number of files for semantic search (default 3)", {}, 1),
                  param("new_directory", ParamKind::String, false, "integrated mode: directory to group matches in")},
                 false,
                 [](const ApiCall& c, std::vector<std::string>& out) {
                     const auto mode = c.str("mode").value_or("");
                     if (mode == "keyword") {
                         require(c, {"keywords"}, "in keyword mode", out);
                     } else if (mode == "semantic") {
                         require(c, {"query"}, "in semantic mode", out);
                     } else if (mode == "integrated") {
                         require(c, {"keywords", "query", "new_directory"}, "in integrated mode", out);
                     }
                     need_condition(c, out);
                 }});
    s.push_back({"change_summary",
                 "replace a file's content and summarize what changed",
                 {param("name", ParamKind::String, true, "file name"), directory_param(false),
                  param("import_file", ParamKind::Path, true, "path of the new content, or the new text itself")},
                 true,
                 nullptr});
    s.push_back({"rollback",
                 "restore an earlier version of a file, by date or by how many versions back",
                 {param("name", ParamKind::String, true, "file name"), directory_param(false),
                  param("by", ParamKind::Enum, true, "count or date", {"count", "date"}),
                  param("k", ParamKind::Integer, false, "versions back; 1 is the most recent", {}, 1),
                  param("date", ParamKind::Timestamp, false, "restore the latest version on or before this date")},
                 true,
                 [](const ApiCall& c, std::vector<std::string>& out) {
                     const auto by = c.str("by").value_or("");
                     if (by == "count") {
                         require(c, {"k"}, "when rolling back by count", out);
                         if (c.has("date")) {
                             out.push_back("date: not allowed when rolling back by count");
                         }
                     } else if (by == "date") {
                         require(c, {"date"}, "when rolling back by date", out);
                         if (c.has("k")) {
                             out.push_back("k: not allowed when rolling back by date");
                         }
                     }
                 }});
    s.push_back({"create_link",
                 "publish a file under a shareable link, optionally expiring",
                 {param("name", ParamKind::String, true, "file name"), directory_param(false),
                  param("validity", ParamKind::Duration, false, "how long the link stays active", {}, 1)},
                 false,
                 nullptr});
    s.push_back({"revoke_link",
                 "disable a shareable link",
                 {param("token", ParamKind::String, true, "link token")},
                 false,
                 nullptr});

    const auto file_args = [] {
        return std::vector<ParamSpec>{directory_param(true), param("name", ParamKind::String, true, "file name")};
    };
    s.push_back({"create_or_get_file",
                 "open a file, creating it from import_file when missing; without a name, list the directory",
                 {directory_param(true), param("name", ParamKind::String, false, "file name"),
                  param("import_file", ParamKind::Path, false, "path or text to create the file from")},
                 false,
                 nullptr});
    s.push_back({"add_",
                 "append text to a file",
                 {directory_param(true), param("name", ParamKind::String, true, "file name"),
                  param("new_content", ParamKind::String, true, "text to append")},
                 false,
                 nullptr});
    s.push_back({"overwrite",
                 "replace a file's content",
                 {directory_param(true), param("name", ParamKind::String, true, "file name"),
                  param("import_file", ParamKind::Path, true, "path or text of the new content")},
                 true,
                 nullptr});
    s.push_back({"del_",
                 "delete a file by name, or every file containing key_text",
                 {directory_param(true), param("name", ParamKind::String, false, "file name"),
                  param("key_text", ParamKind::String, false, "delete files whose content contains this")},
                 true,
                 [](const ApiCall& c, std::vector<std::string>& out) {
                     if (!c.has("name") && !c.has("key_text")) {
                         out.push_back("name: either name or key_text is required");
                     }
                 }});
    s.push_back({"keywords_retrieve",
                 "list files containing keywords",
                 {param("keywords", ParamKind::StringList, true, "keywords"), directory_param(false), condition_param()},
                 false,
                 need_condition});
    s.push_back({"semantic_retrieve",
                 "list the files closest in meaning to a query",
                 {param("query", ParamKind::String, true, "description of the wanted content"), directory_param(false),
                  param("n", ParamKind::Integer, false, "number of files (default 3)", {}, 1)},
                 false,
                 nullptr});
    s.push_back({"create",
                 "import every file of a disk folder into a directory",
                 {directory_param(true), param("import_dir", ParamKind::Path, true, "folder to import")},
                 false,
                 nullptr});
    s.push_back({"lock_file", "make a file read-only", file_args(), false, nullptr});
    s.push_back({"unlock_file", "make a file writable again", file_args(), false, nullptr});
    s.push_back({"group_keywords",
                 "copy files containing keywords into a new directory",
                 {param("keywords", ParamKind::StringList, true, "keywords"),
                  param("new_directory", ParamKind::String, true, "directory to create"), directory_param(false),
                  condition_param()},
                 false,
                 need_condition});
    s.push_back({"group_semantic",
                 "copy the files closest in meaning to a query into a new directory",
                 {param("query", ParamKind::String, true, "description of the wanted content"),
                  param("new_directory", ParamKind::String, true, "directory to create"), directory_param(false),
                  param("n", ParamKind::Integer, false, "number of files (default 3)", {}, 1)},
                 false,
                 nullptr});
    s.push_back({"integrated_retrieve",
                 "group files by keywords, then rank the group by meaning",
                 {param("keywords", ParamKind::StringList, true, "keywords"), condition_param(),
                  param("query", ParamKind::String, true, "description of the wanted content"),
                  param("new_directory", ParamKind::String, true, "directory to create"), directory_param(false),
                  param("n", ParamKind::Integer, false, "number of files (default 3)", {}, 1)},
                 false,
                 need_condition});
    s.push_back({"file_join",
                 "concatenate two files; condition \"new\" writes a new file, otherwise the second is merged into the first",
                 {directory_param(true), param("name1", ParamKind::String, true, "first file"),
                  param("name2", ParamKind::String, true, "second file"),
                  param("directory2", ParamKind::String, false, "directory of the second file"),
                  param("condition", ParamKind::String, false, "\"new\" to keep both inputs")},
                 false,
                 nullptr});
    s.push_back({"update_access_time", "mark a file as accessed now", file_args(), false, nullptr});
    return s;
}

bool holds_kind(const ArgValue& v, ParamKind kind) {
    switch (kind) {
    case ParamKind::String:
    case ParamKind::Path:
    case ParamKind::Enum:
        return std::holds_alternative<std::string>(v);
    case ParamKind::Integer:
    case ParamKind::Duration:
    case ParamKind::Timestamp:
        return std::holds_alternative<std::int64_t>(v);
    case ParamKind::StringList:
        return std::holds_alternative<std::vector<std::string>>(v);
    }
    return false;
}

std::optional<std::int64_t> number_word(const std::string& w) {
    static const std::map<std::string, std::int64_t> words{
        {"a", 1},        {"an", 1},        {"one", 1},       {"two", 2},       {"three", 3},   {"four", 4},
        {"five", 5},     {"six", 6},       {"seven", 7},     {"eight", 8},     {"nine", 9},    {"ten", 10},
        {"eleven", 11},  {"twelve", 12},   {"thirteen", 13}, {"fourteen", 14}, {"fifteen", 15}, {"sixteen", 16},
        {"seventeen", 17}, {"eighteen", 18}, {"nineteen", 19}, {"twenty", 20},  {"thirty", 30}, {"forty", 40},
        {"fifty", 50}};
    const auto it = words.find(w);
    if (it == words.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::int64_t> parse_count(const std::string& token) {
    if (!token.empty() && token.find_first_not_of("0123456789") == std::string::npos) {
        if (token.size() > 15) {
            return std::nullopt;
        }
        return std::stoll(token);
    }
    return number_word(token);
}

/// Seconds per unit word, months as 30 days and years as 365.
std::optional<std::int64_t> unit_seconds(std::string unit) {
    if (unit.size() > 1 && unit.back() == 's') {
        unit.pop_back();
    }
    static const std::map<std::string, std::int64_t> units{
        {"s", 1},          {"sec", 1},        {"second", 1},    {"m", 60},           {"min", 60},
        {"minute", 60},    {"h", 3600},       {"hr", 3600},     {"hour", 3600},      {"d", 86400},
        {"day", 86400},    {"w", 604800},     {"wk", 604800},   {"week", 604800},    {"mo", 2592000},
        {"month", 2592000}, {"y", 31536000},  {"yr", 31536000}, {"year", 31536000}};
    const auto it = units.find(unit);
    if (it == units.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<std::string> words_of(const std::string& text) {
    static const std::regex word(R"([a-z]+|[0-9]+)");
    std::vector<std::string> out;
    for (std::sregex_iterator it(text.begin(), text.end(), word), end; it != end; ++it) {
        out.push_back(it->str());
    }
    return out;
}

[[noreturn]] void bad_value(const std::string& why) { throw Error(ErrorCode::SchemaViolation, why); }

std::int64_t json_integral(const nlohmann::json& v) {
    if (v.is_number_integer()) {
        return v.get<std::int64_t>();
    }
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && std::floor(d) == d && std::fabs(d) < 9.0e15) {
            return static_cast<std::int64_t>(d);
        }
    }
    bad_value("expected a whole number");
}

std::string text_value(const nlohmann::json& v) {
    if (v.is_string()) {
        return trim(v.get<std::string>());
    }
    if (v.is_number()) {
        return v.dump();
    }
    bad_value("expected text");
}

Timestamp end_of_day(std::int64_t y, unsigned m, unsigned d) {
    static constexpr unsigned kDays[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m < 1 || m > 12 || d < 1 || d > kDays[m - 1]) {
        bad_value("not a calendar date");
    }
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    if (m == 2 && d == 29 && !leap) {
        bad_value("not a calendar date");
    }
    return (days_from_civil(y, m, d) + 1) * kDayMs - 1;
}

Timestamp end_of_day_of(Timestamp t) {
    const auto day = t >= 0 ? t / kDayMs : (t - kDayMs + 1) / kDayMs;
    return (day + 1) * kDayMs - 1;
}

} // namespace

std::string_view to_string(ParamKind kind) {
    switch (kind) {
    case ParamKind::String:
        return "string";
    case ParamKind::Integer:
        return "integer";
    case ParamKind::Path:
        return "path";
    case ParamKind::Duration:
        return "duration";
    case ParamKind::Timestamp:
        return "timestamp";
    case ParamKind::Enum:
        return "enum";
    case ParamKind::StringList:
        return "string_list";
    }
    return "string";
}

std::optional<std::string> ApiCall::str(const std::string& name) const {
    const auto it = args.find(name);
    if (it == args.end() || !std::holds_alternative<std::string>(it->second)) {
        return std::nullopt;
    }
    return std::get<std::string>(it->second);
}

std::optional<std::int64_t> ApiCall::integer(const std::string& name) const {
    const auto it = args.find(name);
    if (it == args.end() || !std::holds_alternative<std::int64_t>(it->second)) {
        return std::nullopt;
    }
    return std::get<std::int64_t>(it->second);
}

std::optional<std::vector<std::string>> ApiCall::list(const std::string& name) const {
    const auto it = args.find(name);
    if (it == args.end() || !std::holds_alternative<std::vector<std::string>>(it->second)) {
        return std::nullopt;
    }
    return std::get<std::vector<std::string>>(it->second);
}

nlohmann::json to_json(const ArgValue& value) {
    return std::visit([](const auto& v) { return nlohmann::json(v); }, value);
}

nlohmann::json to_json(const ApiCall& call) {
    nlohmann::json args = nlohmann::json::object();
    for (const auto& [k, v] : call.args) {
        args[k] = to_json(v);
    }
    return {{"api", call.api_name}, {"args", args}};
}

const ParamSpec* ApiSchema::find(std::string_view name) const {
    for (const auto& p : params) {
        if (p.name == name) {
            return &p;
        }
    }
    return nullptr;
}

ApiCatalog::ApiCatalog(std::vector<ApiSchema> schemas) : schemas_(std::move(schemas)) {
    std::set<std::string> apis;
    for (const auto& s : schemas_) {
        if (!apis.insert(s.api_name).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate api '" + s.api_name + "'");
        }
        std::set<std::string> names;
        for (const auto& p : s.params) {
            if (!names.insert(p.name).second) {
                throw Error(ErrorCode::InvalidArgument, "duplicate parameter '" + p.name + "' in " + s.api_name);
            }
        }
    }
}

const ApiSchema* ApiCatalog::find(std::string_view api_name) const {
    for (const auto& s : schemas_) {
        if (s.api_name == api_name) {
            return &s;
        }
    }
    return nullptr;
}

const ApiSchema& ApiCatalog::at(std::string_view api_name) const {
    const auto* s = find(api_name);
    if (s == nullptr) {
        throw Error(ErrorCode::UnknownApi, "unknown api '" + std::string(api_name) + "'",
                    {{"api", std::string(api_name)}});
    }
    return *s;
}

const ApiCatalog& ApiCatalog::standard() {
    static const ApiCatalog catalog(standard_schemas());
    return catalog;
}

std::string ApiCatalog::describe() const {
    std::string out;
    for (const auto& s : schemas_) {
        out += "- " + s.api_name + ": " + s.description + "\n";
        for (const auto& p : s.params) {
            out += "    " + p.name + ": " + std::string(to_string(p.kind)) + (p.required ? ", required" : ", optional");
            if (!p.enum_values.empty()) {
                out += ", one of ";
                for (std::size_t i = 0; i < p.enum_values.size(); ++i) {
                    out += (i ? "|" : "") + p.enum_values[i];
                }
            }
            if (p.min) {
                out += ", at least " + std::to_string(*p.min);
            }
            out += ". " + p.description + "\n";
        }
    }
    if (!out.empty()) {
        out.pop_back();
    }
    return out;
}

bool is_danger(const ApiCall& call, const ApiCatalog& catalog) {
    const auto* schema = catalog.find(call.api_name);
    if (schema == nullptr) {
        return false;
    }
    if (call.api_name == "file_join") {
        return call.str("condition").value_or("") != "new";
    }
    return schema->danger;
}

void validate(const ApiCall& call, const ApiCatalog& catalog) {
    const auto& schema = catalog.at(call.api_name);
    std::vector<std::string> violations;
    for (const auto& [name, value] : call.args) {
        const auto* p = schema.find(name);
        if (p == nullptr) {
            violations.push_back(name + ": not a parameter of " + call.api_name);
            continue;
        }
        if (!holds_kind(value, p->kind)) {
            violations.push_back(name + ": expected " + std::string(to_string(p->kind)));
            continue;
        }
        if (const auto* s = std::get_if<std::string>(&value)) {
            if (s->empty()) {
                violations.push_back(name + ": must not be empty");
            } else if (p->kind == ParamKind::Enum &&
                       std::find(p->enum_values.begin(), p->enum_values.end(), *s) == p->enum_values.end()) {
                violations.push_back(name + ": '" + *s + "' is not an allowed value");
            }
        } else if (const auto* i = std::get_if<std::int64_t>(&value)) {
            if (p->min && *i < *p->min) {
                violations.push_back(name + ": must be at least " + std::to_string(*p->min));
            }
        } else if (const auto* l = std::get_if<std::vector<std::string>>(&value)) {
            if (l->empty()) {
                violations.push_back(name + ": must not be empty");
            }
            for (const auto& item : *l) {
                if (item.empty()) {
                    violations.push_back(name + ": contains an empty item");
                    break;
                }
            }
        }
    }
    for (const auto& p : schema.params) {
        if (p.required && !call.has(p.name)) {
            violations.push_back(p.name + ": missing");
        }
    }
    if (violations.empty() && schema.cross_check) {
        schema.cross_check(call, violations);
    }
    if (!violations.empty()) {
        std::string msg = "invalid " + call.api_name + " call: ";
        for (std::size_t i = 0; i < violations.size(); ++i) {
            msg += (i ? "; " : "") + violations[i];
        }
        throw Error(ErrorCode::SchemaViolation, msg, {{"api", call.api_name}, {"violations", violations}});
    }
}

std::int64_t Normalizer::integer(const nlohmann::json& value) const {
    if (value.is_number()) {
        return json_integral(value);
    }
    if (!value.is_string()) {
        bad_value("expected a whole number");
    }
    const auto text = ascii_lower(trim(value.get<std::string>()));
    // "3", "three", "3 versions ago", "the version 3 back"
    for (const auto& w : words_of(text)) {
        if (w == "a" || w == "an") {
            continue;
        }
        if (auto n = parse_count(w)) {
            return *n;
        }
    }
    if (!text.empty() && text[0] == '-') {
        const auto rest = text.substr(1);
        if (!rest.empty() && rest.find_first_not_of("0123456789") == std::string::npos && rest.size() < 16) {
            return -std::stoll(rest);
        }
    }
    bad_value("'" + text + "' is not a whole number");
}

std::int64_t Normalizer::duration_seconds(const nlohmann::json& value) const {
    if (value.is_number()) {
        return json_integral(value);
    }
    if (!value.is_string()) {
        bad_value("expected a duration");
    }
    const auto text = ascii_lower(trim(value.get<std::string>()));
    if (!text.empty() && text.find_first_not_of("0123456789") == std::string::npos && text.size() < 16) {
        return std::stoll(text);
    }
    // Sum of "<count> <unit>" pairs: "3 months", "1 week 2 days".
    std::int64_t total = 0;
    bool any = false;
    auto words = words_of(text);
    for (std::size_t i = 0; i < words.size(); ++i) {
        const auto count = parse_count(words[i]);
        if (!count) {
            continue;
        }
        if (i + 1 < words.size()) {
            if (const auto unit = unit_seconds(words[i + 1])) {
                total += *count * *unit;
                any = true;
                ++i;
            }
        }
    }
    if (!any && words.size() == 1) {
        if (const auto unit = unit_seconds(words[0])) {
            total = *unit;
            any = true;
        }
    }
    if (!any) {
        bad_value("'" + text + "' is not a duration");
    }
    return total;
}

std::int64_t Normalizer::timestamp_ms(const nlohmann::json& value) const {
    if (value.is_number()) {
        return json_integral(value);
    }
    if (!value.is_string()) {
        bad_value("expected a date");
    }
    const auto raw = trim(value.get<std::string>());
    const auto text = ascii_lower(raw);
    if (!text.empty() && text.find_first_not_of("0123456789") == std::string::npos && text.size() < 16) {
        return std::stoll(text);
    }
    static const std::regex date(R"((\d{4})[-/.](\d{1,2})[-/.](\d{1,2}))");
    std::smatch m;
    if (std::regex_match(text, m, date)) {
        return end_of_day(std::stoll(m[1]), static_cast<unsigned>(std::stoul(m[2])),
                          static_cast<unsigned>(std::stoul(m[3])));
    }
    if (auto t = parse_rfc3339(raw)) {
        return *t;
    }
    const auto now = clock_->now();
    if (text == "today" || text == "now") {
        return text == "now" ? now : end_of_day_of(now);
    }
    if (text == "yesterday") {
        return end_of_day_of(now - kDayMs);
    }
    const auto words = words_of(text);
    if (words.size() == 2 && words[0] == "last") {
        if (const auto unit = unit_seconds(words[1])) {
            return now - *unit * 1000;
        }
    }
    if (words.size() == 3 && words[2] == "ago") {
        const auto count = parse_count(words[0]);
        const auto unit = unit_seconds(words[1]);
        if (count && unit) {
            return now - *count * *unit * 1000;
        }
    }
    bad_value("'" + raw + "' is not a date");
}

ApiCall Normalizer::build(const std::string& api_name, const nlohmann::json& args_in, const std::string& raw_prompt,
                          const ApiCatalog& catalog) const {
    const auto& schema = catalog.at(api_name);
    if (!args_in.is_null() && !args_in.is_object()) {
        throw Error(ErrorCode::SchemaViolation, "args must be an object", {{"api", api_name}});
    }
    nlohmann::json args = args_in.is_null() ? nlohmann::json::object() : args_in;
    for (auto it = args.begin(); it != args.end();) {
        it = it->is_null() ? args.erase(it) : std::next(it);
    }

    // Fill discriminators the model may leave implicit.
    if (api_name == "rollback" && !args.contains("by")) {
        if (args.contains("k") && !args.contains("date")) {
            args["by"] = "count";
        } else if (args.contains("date") && !args.contains("k")) {
            args["by"] = "date";
        }
    }
    if (api_name == "retrieve_summary" && !args.contains("mode")) {
        const bool kw = args.contains("keywords");
        const bool q = args.contains("query");
        if (kw && q && args.contains("new_directory")) {
            args["mode"] = "integrated";
        } else if (kw && !q) {
            args["mode"] = "keyword";
        } else if (q && !kw) {
            args["mode"] = "semantic";
        }
    }

    ApiCall call;
    call.api_name = api_name;
    call.raw_prompt = raw_prompt;
    std::vector<std::string> violations;
    for (const auto& [name, value] : args.items()) {
        const auto* p = schema.find(name);
        if (p == nullptr) {
            violations.push_back(name + ": not a parameter of " + api_name);
            continue;
        }
        try {
            switch (p->kind) {
            case ParamKind::String:
            case ParamKind::Path:
                call.args[name] = text_value(value);
                break;
            case ParamKind::Enum:
                call.args[name] = ascii_lower(text_value(value));
                break;
            case ParamKind::Integer:
                call.args[name] = integer(value);
                break;
            case ParamKind::Duration:
                call.args[name] = duration_seconds(value);
                break;
            case ParamKind::Timestamp:
                call.args[name] = timestamp_ms(value);
                break;
            case ParamKind::StringList: {
                std::vector<std::string> items;
                if (value.is_array()) {
                    for (const auto& v : value) {
                        items.push_back(text_value(v));
                    }
                } else {
                    for (const auto& part : split(text_value(value), '|')) {
                        auto t = trim(part);
                        if (!t.empty()) {
                            items.push_back(std::move(t));
                        }
                    }
                }
                call.args[name] = std::move(items);
                break;
            }
            }
        } catch (const Error& e) {
            violations.push_back(name + ": " + e.what());
        }
    }
    if (!violations.empty()) {
        std::string msg = "invalid " + api_name + " call: ";
        for (std::size_t i = 0; i < violations.size(); ++i) {
            msg += (i ? "; " : "") + violations[i];
        }
        throw Error(ErrorCode::SchemaViolation, msg, {{"api", api_name}, {"violations", violations}});
    }
    validate(call, catalog);
    return call;
}

ApiCall Normalizer::normalize(const ApiCall& call, const ApiCatalog& catalog) const {
    auto out = build(call.api_name, to_json(call)["args"], call.raw_prompt, catalog);
    out.confidence = call.confidence;
    return out;
}

std::pair<std::string, nlohmann::json> decode_llm_output(std::string_view raw_in) {
    auto raw = trim(raw_in);
    if (raw.empty()) {
        throw Error(ErrorCode::UnparseableOutput, "empty model output");
    }
    const auto open = raw.find('{');
    const auto close = raw.rfind('}');
    if (open != std::string::npos && close != std::string::npos && close > open) {
        const auto parsed = nlohmann::json::parse(raw.substr(open, close - open + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) {
            const auto api = parsed.contains("api") ? parsed["api"] : parsed.value("api_name", nlohmann::json());
            if (!api.is_string()) {
                throw Error(ErrorCode::UnparseableOutput, "model output has no api name");
            }
            auto args = parsed.contains("args") ? parsed["args"] : parsed.value("arguments", nlohmann::json::object());
            return {api.get<std::string>(), args};
        }
    }

    // Comma-separated form: api, key=value, key=a|b
    static const std::regex ident(R"([A-Za-z_][A-Za-z0-9_]*)");
    auto pieces = split(raw, ',');
    const auto api = trim(pieces.front());
    if (!std::regex_match(api, ident)) {
        throw Error(ErrorCode::UnparseableOutput, "model output is neither JSON nor a comma-separated call");
    }
    nlohmann::json args = nlohmann::json::object();
    for (std::size_t i = 1; i < pieces.size(); ++i) {
        const auto piece = trim(pieces[i]);
        const auto eq = piece.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::UnparseableOutput, "argument '" + piece + "' is not key=value");
        }
        const auto key = trim(piece.substr(0, eq));
        auto value = trim(piece.substr(eq + 1));
        if (!std::regex_match(key, ident)) {
            throw Error(ErrorCode::UnparseableOutput, "bad argument name '" + key + "'");
        }
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
            value = value.substr(1, value.size() - 2);
        }
        if (value.find('|') != std::string::npos) {
            nlohmann::json list = nlohmann::json::array();
            for (const auto& part : split(value, '|')) {
                list.push_back(trim(part));
            }
            args[key] = list;
        } else {
            args[key] = value;
        }
    }
    return {api, args};
}

Parser::Parser(std::shared_ptr<const LlmClient> llm, std::shared_ptr<const Clock> clock, const ApiCatalog& catalog)
    : llm_(std::move(llm)), clock_(std::move(clock)), catalog_(catalog), normalizer_(clock_) {}

std::string Parser::system_prompt() const {
    const auto today = format_rfc3339(clock_->now()).substr(0, 10);
    return render_template(prompt_template("parser_system.v1.txt"), {{"catalog", catalog_.describe()}, {"today", today}});
}

ApiCall Parser::parse(const std::string& prompt) const {
    if (trim(prompt).empty()) {
        throw Error(ErrorCode::PreconditionFailed, "prompt is empty");
    }
    const auto raw = llm_->complete({system_prompt(), prompt, true});
    return decode(raw, prompt);
}

ApiCall Parser::decode(std::string_view raw_output, const std::string& prompt) const {
    try {
        const auto [api, args] = decode_llm_output(raw_output);
        if (catalog_.find(api) == nullptr) {
            throw Error(ErrorCode::UnknownApi, "the request does not map to a known api", {{"api", api}});
        }
        return normalizer_.build(api, args, prompt, catalog_);
    } catch (const Error& e) {
        auto details = e.details().is_object() ? e.details() : nlohmann::json::object();
        details["raw_output"] = std::string(raw_output);
        throw Error(e.code(), e.what(), details);
    }
}

std::vector<ParserFixture> load_fixtures(const std::filesystem::path& path, const Normalizer& normalizer) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::PathUnreadable, "cannot open fixtures " + path.string());
    }
    std::vector<ParserFixture> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            ParserFixture f;
            f.prompt = j.at("prompt").get<std::string>();
            const auto& e = j.at("expected");
            f.expected = normalizer.build(e.at("api").get<std::string>(), e.value("args", nlohmann::json::object()),
                                          f.prompt);
            out.push_back(std::move(f));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
    }
    return out;
}

double AccuracyReport::macro_average() const {
    if (rows.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& r : rows) {
        sum += r.accuracy();
    }
    return sum / static_cast<double>(rows.size());
}

std::string AccuracyReport::to_tsv() const {
    std::string out = "api\tmodel\ttotal\tcorrect\taccuracy\n";
    std::size_t total = 0;
    std::size_t correct = 0;
    for (const auto& r : rows) {
        out += fmt::format("{}\t{}\t{}\t{}\t{:.4f}\n", r.api_name, model, r.total, r.correct, r.accuracy());
        total += r.total;
        correct += r.correct;
    }
    out += fmt::format("average\t{}\t{}\t{}\t{:.4f}\n", model, total, correct, macro_average());
    return out;
}

AccuracyReport evaluate_accuracy(const Parser& parser, const std::vector<ParserFixture>& fixtures,
                                 const std::string& model_name) {
    AccuracyReport report;
    report.model = model_name;
    std::map<std::string, std::size_t> row_of;
    for (const auto& f : fixtures) {
        auto [it, fresh] = row_of.emplace(f.expected.api_name, report.rows.size());
        if (fresh) {
            report.rows.push_back({f.expected.api_name, 0, 0});
        }
        auto& row = report.rows[it->second];
        ++row.total;
        try {
            const auto got = parser.parse(f.prompt);
            if (got.same_call(f.expected)) {
                ++row.correct;
            } else {
                report.misses.emplace_back(f.prompt, "parsed " + to_json(got).dump());
            }
        } catch (const Error& e) {
            report.misses.emplace_back(f.prompt, std::string(to_string(e.code())) + ": " + e.what());
        }
    }
    return report;
}

} // namespace lsfs
