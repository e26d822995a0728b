#include "lsfs/semantic_apis.hpp"

#include "lsfs/error.hpp"

#include <spdlog/spdlog.h>

#include <set>

namespace lsfs {

std::string_view to_string(RetrieveMode mode) {
    switch (mode) {
    case RetrieveMode::Keyword:
        return "keyword";
    case RetrieveMode::Semantic:
        return "semantic";
    case RetrieveMode::Integrated:
        return "integrated";
    }
    return "keyword";
}

RetrieveMode parse_retrieve_mode(std::string_view text) {
    if (text == "keyword") {
        return RetrieveMode::Keyword;
    }
    if (text == "semantic") {
        return RetrieveMode::Semantic;
    }
    if (text == "integrated") {
        return RetrieveMode::Integrated;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown retrieval mode '" + std::string(text) + "'");
}

SemanticApis::SemanticApis(Syscalls& syscalls, VersionRecorder& recorder, ShareStore& shares,
                           std::shared_ptr<const LlmClient> llm, std::shared_ptr<const Clock> clock)
    : sys_(syscalls), recorder_(recorder), shares_(shares), llm_(std::move(llm)), clock_(std::move(clock)) {}

RetrieveSummary SemanticApis::retrieve_summary(RetrieveMode mode, const RetrieveArgs& args,
                                               const SelectionFilter& filter) {
    RetrieveSummary out;
    switch (mode) {
    case RetrieveMode::Keyword:
        out.candidates = sys_.keywords_retrieve(args.keywords, args.directory, args.condition);
        break;
    case RetrieveMode::Semantic:
        out.candidates = sys_.semantic_retrieve(args.query, args.directory, args.n);
        break;
    case RetrieveMode::Integrated:
        out.candidates = sys_.integrated_retrieve(args.keywords, args.condition, args.query, args.new_directory,
                                                  args.directory, args.n);
        break;
    }

    std::vector<std::size_t> keep;
    if (filter) {
        keep = filter(out.candidates);
        std::set<std::size_t> seen;
        for (auto i : keep) {
            if (i >= out.candidates.size() || !seen.insert(i).second) {
                throw Error(ErrorCode::InvalidArgument, "selection index out of range or repeated",
                            {{"index", i}, {"candidates", out.candidates.size()}});
            }
        }
    } else {
        for (std::size_t i = 0; i < out.candidates.size(); ++i) {
            keep.push_back(i);
        }
    }

    if (out.candidates.scores) {
        out.kept.scores.emplace();
    }
    for (auto i : keep) {
        out.kept.names.push_back(out.candidates.names[i]);
        out.kept.directories.push_back(out.candidates.directories[i]);
        out.kept.contents.push_back(out.candidates.contents[i]);
        if (out.candidates.scores) {
            out.kept.scores->push_back((*out.candidates.scores)[i]);
        }
    }

    for (std::size_t i = 0; i < out.kept.size(); ++i) {
        const auto& content = out.kept.contents[i];
        auto text = content.empty() ? std::string() : summarize(*llm_, content);
        if (!out.summary.empty()) {
            out.summary += "\n\n";
        }
        out.summary += "## " + out.kept.directories[i] + "/" + out.kept.names[i] + "\n" + text;
        out.summaries.push_back(std::move(text));
    }
    return out;
}

ChangeSummary SemanticApis::change_summary(const FileKey& key, const ImportSource& import_file) {
    // Read the import before taking the lock; extraction may be slow.
    auto new_content = sys_.read_import(import_file);
    std::optional<std::string> source;
    if (import_file.kind == ImportSource::Kind::Path) {
        source = import_file.value;
    }

    ChangeSummary out;
    out.key = key;
    std::string old_content;
    {
        std::lock_guard lock(sys_.locks().at(key));
        const auto current = sys_.store().find_entry(key.directory, key.name);
        if (!current) {
            throw Error(ErrorCode::NotFound, "no file '" + key.name + "' in directory '" + key.directory + "'");
        }
        if (current->metadata.read_only) {
            throw Error(ErrorCode::FileLocked, "file '" + key.name + "' is read-only");
        }
        old_content = current->content;
        out.version_seq_before = recorder_.record(key, current->metadata, current->content);
        out.entry = sys_.overwrite_locked(key, new_content, source);
    }

    out.diff = compare_change(old_content, new_content);
    if (out.diff.empty()) {
        out.summary = std::string(kNoChangeSummary);
        return out;
    }
    try {
        out.summary = summarize(*llm_, old_content, new_content);
    } catch (const Error& e) {
        spdlog::warn("change summary for {}/{} degraded to diff only: {}", key.directory, key.name, e.what());
        out.summarized = false;
    }
    return out;
}

FileEntry SemanticApis::rollback(const FileKey& key, const RollbackTarget& target) {
    std::lock_guard lock(sys_.locks().at(key));
    const auto resolved = target.by == RollbackTarget::By::Count ? recorder_.resolve_by_count(key, target.k)
                                                                  : recorder_.resolve_by_date(key, target.date);
    const auto current = sys_.store().find_entry(key.directory, key.name);
    if (!current) {
        throw Error(ErrorCode::NotFound, "no file '" + key.name + "' in directory '" + key.directory + "'");
    }
    if (current->metadata.read_only) {
        throw Error(ErrorCode::FileLocked, "file '" + key.name + "' is read-only");
    }
    recorder_.record(key, current->metadata, current->content);
    return sys_.overwrite_locked(key, resolved.content, current->metadata.source_path);
}

ShareLink SemanticApis::create_link(const FileKey& key, std::optional<std::int64_t> validity_seconds) {
    if (validity_seconds && *validity_seconds <= 0) {
        throw Error(ErrorCode::InvalidArgument, "link validity must be positive");
    }
    const auto entry = sys_.store().get_entry(key.directory, key.name);
    std::optional<Timestamp> expires_at;
    if (validity_seconds) {
        expires_at = clock_->now() + *validity_seconds * 1000;
    }
    return shares_.publish(key, entry.content, expires_at);
}

ShareLink SemanticApis::revoke_link(const std::string& token) { return shares_.revoke(token); }

std::string SemanticApis::fetch_shared(const std::string& token) { return shares_.fetch(token); }

} // namespace lsfs
