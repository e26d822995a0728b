#include "lsfs/executor.hpp"

#include "lsfs/error.hpp"

namespace lsfs {

namespace {

std::optional<MatchMode> match_mode(const ApiCall& call) {
    const auto c = call.str("condition");
    if (!c) {
        return std::nullopt;
    }
    return *c == "and" ? MatchMode::And : MatchMode::Or;
}

std::size_t top_n(const ApiCall& call) { return static_cast<std::size_t>(call.integer("n").value_or(3)); }

nlohmann::json metadata_list(const std::vector<FileMetadata>& list) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& m : list) {
        out.push_back(to_json(m));
    }
    return out;
}

nlohmann::json entry_json(const FileEntry& e) {
    auto j = to_json(e.metadata);
    j["content"] = e.content;
    return j;
}

} // namespace

FileKey Executor::resolve(const ApiCall& call) const {
    return apis_.syscalls().locate(*call.str("name"), call.str("directory"));
}

nlohmann::json Executor::execute(const ApprovedCall& approved, const SelectionFilter& filter) {
    const auto& call = approved.call();
    const auto& api = call.api_name;
    auto& sys = apis_.syscalls();
    nlohmann::json result;

    if (api == "retrieve_summary") {
        RetrieveArgs args;
        args.keywords = call.list("keywords").value_or(std::vector<std::string>{});
        args.condition = match_mode(call);
        args.query = call.str("query").value_or("");
        args.directory = call.str("directory");
        args.n = top_n(call);
        args.new_directory = call.str("new_directory").value_or("");
        const auto out = apis_.retrieve_summary(parse_retrieve_mode(*call.str("mode")), args, filter);
        nlohmann::json summaries = nlohmann::json::array();
        for (std::size_t i = 0; i < out.kept.size(); ++i) {
            summaries.push_back(
                {{"directory", out.kept.directories[i]}, {"name", out.kept.names[i]}, {"summary", out.summaries[i]}});
        }
        result = {{"candidates", to_json(out.candidates)},
                  {"kept", to_json(out.kept)},
                  {"summaries", summaries},
                  {"summary", out.summary}};
    } else if (api == "change_summary") {
        const auto out = apis_.change_summary(resolve(call), ImportSource::guess(*call.str("import_file")));
        result = {{"directory", out.key.directory},
                  {"name", out.key.name},
                  {"diff", to_json(out.diff)},
                  {"summary", out.summary},
                  {"summarized", out.summarized},
                  {"version_seq_before", out.version_seq_before},
                  {"file", entry_json(out.entry)}};
    } else if (api == "rollback") {
        const auto key = resolve(call);
        const auto target = *call.str("by") == "count"
                                 ? RollbackTarget::count(static_cast<std::size_t>(*call.integer("k")))
                                 : RollbackTarget::at(*call.integer("date"));
        result = {{"file", entry_json(apis_.rollback(key, target))}};
    } else if (api == "create_link") {
        result = to_json(apis_.create_link(resolve(call), call.integer("validity")));
    } else if (api == "revoke_link") {
        result = to_json(apis_.revoke_link(*call.str("token")));
    } else if (api == "create_or_get_file") {
        std::optional<ImportSource> import;
        if (const auto f = call.str("import_file")) {
            import = ImportSource::guess(*f);
        }
        const auto out = sys.create_or_get_file(*call.str("directory"), call.str("name"), import);
        if (const auto* e = std::get_if<FileEntry>(&out)) {
            result = {{"file", entry_json(*e)}};
        } else {
            result = {{"files", metadata_list(std::get<std::vector<FileMetadata>>(out))}};
        }
    } else if (api == "add_") {
        result = {{"file", entry_json(sys.add_(*call.str("directory"), *call.str("name"), *call.str("new_content")))}};
    } else if (api == "overwrite") {
        result = {{"file", entry_json(sys.overwrite(*call.str("directory"), *call.str("name"),
                                                    ImportSource::guess(*call.str("import_file"))))}};
    } else if (api == "del_") {
        result = {{"deleted", metadata_list(sys.del_(*call.str("directory"), call.str("name"), call.str("key_text")))}};
    } else if (api == "keywords_retrieve") {
        result = {{"results", to_json(sys.keywords_retrieve(*call.list("keywords"), call.str("directory"),
                                                            match_mode(call)))}};
    } else if (api == "semantic_retrieve") {
        result = {{"results", to_json(sys.semantic_retrieve(*call.str("query"), call.str("directory"), top_n(call)))}};
    } else if (api == "create") {
        const auto report = sys.create(*call.str("directory"), *call.str("import_dir"));
        nlohmann::json failures = nlohmann::json::array();
        for (const auto& f : report.failures) {
            failures.push_back({{"file", f.file}, {"code", f.code}, {"message", f.message}});
        }
        nlohmann::json files = nlohmann::json::array();
        for (const auto& e : report.entries) {
            files.push_back(to_json(e.metadata));
        }
        result = {{"files", files}, {"failures", failures}};
    } else if (api == "lock_file") {
        result = {{"file", to_json(sys.lock_file(*call.str("directory"), *call.str("name")))}};
    } else if (api == "unlock_file") {
        result = {{"file", to_json(sys.unlock_file(*call.str("directory"), *call.str("name")))}};
    } else if (api == "group_keywords") {
        result = {{"files", metadata_list(sys.group_keywords(*call.list("keywords"), *call.str("new_directory"),
                                                             call.str("directory"), match_mode(call)))}};
    } else if (api == "group_semantic") {
        result = {{"files", metadata_list(sys.group_semantic(*call.str("query"), *call.str("new_directory"),
                                                             call.str("directory"), top_n(call)))}};
    } else if (api == "integrated_retrieve") {
        result = {{"results", to_json(sys.integrated_retrieve(*call.list("keywords"), match_mode(call),
                                                              *call.str("query"), *call.str("new_directory"),
                                                              call.str("directory"), top_n(call)))}};
    } else if (api == "file_join") {
        result = {{"file", entry_json(sys.file_join(*call.str("directory"), *call.str("name1"), *call.str("name2"),
                                                    call.str("directory2"), call.str("condition")))}};
    } else if (api == "update_access_time") {
        result = {{"file", to_json(sys.update_access_time(*call.str("directory"), *call.str("name")))}};
    } else {
        throw Error(ErrorCode::UnknownApi, "no executor for api '" + api + "'");
    }
    executed_.fetch_add(1);
    return result;
}

} // namespace lsfs
