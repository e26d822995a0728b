#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>

namespace lsfs {

/// Text extraction keyed by lower-case file extension (".txt"). Files
/// without an extension are treated as plain text.
class ExtractorRegistry {
public:
    using Extractor = std::function<std::string(const std::filesystem::path&)>;

    /// Registers the plain-text pass-through for "", ".txt" and ".md".
    ExtractorRegistry();

    void register_extractor(const std::string& extension, Extractor extractor);
    bool supports(const std::filesystem::path& path) const;

    /// Throws ExtractorUnsupported for unknown extensions or non-UTF-8 text,
    /// PathUnreadable when the file cannot be read.
    std::string extract(const std::filesystem::path& path) const;

private:
    std::map<std::string, Extractor> extractors_;
};

/// Reads a whole file as bytes; throws PathUnreadable.
std::string read_text_file(const std::filesystem::path& path);

} // namespace lsfs
