#include "lsfs/extractor.hpp"

#include "lsfs/error.hpp"
#include "lsfs/util.hpp"

#include <fstream>
#include <iterator>

namespace lsfs {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::PathUnreadable, "cannot read " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ExtractorRegistry::ExtractorRegistry() {
    auto plain = [](const fs::path& p) {
        auto text = read_text_file(p);
        if (!is_valid_utf8(text)) {
            throw Error(ErrorCode::ExtractorUnsupported, p.filename().string() + " is not UTF-8 text");
        }
        return text;
    };
    extractors_[""] = plain;
    extractors_[".txt"] = plain;
    extractors_[".md"] = plain;
}

void ExtractorRegistry::register_extractor(const std::string& extension, Extractor extractor) {
    extractors_[ascii_lower(extension)] = std::move(extractor);
}

bool ExtractorRegistry::supports(const fs::path& path) const {
    return extractors_.count(ascii_lower(path.extension().string())) != 0;
}

std::string ExtractorRegistry::extract(const fs::path& path) const {
    const auto ext = ascii_lower(path.extension().string());
    const auto it = extractors_.find(ext);
    if (it == extractors_.end()) {
        throw Error(ErrorCode::ExtractorUnsupported, "no text extractor registered for '" + ext + "' files");
    }
    return it->second(path);
}

} // namespace lsfs
