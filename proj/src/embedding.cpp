#include "lsfs/embedding.hpp"

#include "lsfs/error.hpp"
#include "lsfs/http_transport.hpp"
#include "lsfs/util.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace lsfs {

namespace {

constexpr float kBigramWeight = 0.5f;

bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_word_byte(c)) {
            cur.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        tokens.push_back(std::move(cur));
    }
    return tokens;
}

std::string_view apply_cap(std::string_view text, std::size_t cap, bool truncate) {
    if (text.size() <= cap) {
        return text;
    }
    if (!truncate) {
        throw Error(ErrorCode::TextTooLarge,
                    "text of " + std::to_string(text.size()) + " bytes exceeds cap " + std::to_string(cap));
    }
    return utf8_prefix(text, cap);
}

} // namespace

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (const char c : data) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::InvalidArgument, "dimension mismatch in cosine");
    }
    double dot = 0;
    double na = 0;
    double nb = 0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double x = a.values[i];
        const double y = b.values[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0 || nb == 0) {
        return 0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

void EmbeddingProviderConfig::validate() const {
    if (dim == 0) {
        throw Error(ErrorCode::InvalidArgument, "embedding dim must be positive");
    }
    if (timeout_ms <= 0) {
        throw Error(ErrorCode::InvalidArgument, "embedding timeout must be positive");
    }
    if (kind == Kind::Remote && endpoint.empty()) {
        throw Error(ErrorCode::InvalidArgument, "remote embedding provider requires an endpoint");
    }
}

std::vector<EmbeddingVector> EmbeddingProvider::embed_batch(const std::vector<std::string>& texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        out.push_back(embed(t));
    }
    return out;
}

DeterministicEmbedder::DeterministicEmbedder(std::size_t dim, std::size_t max_text_bytes, bool truncate_oversize)
    : dim_(dim), max_text_bytes_(max_text_bytes), truncate_(truncate_oversize) {
    if (dim_ == 0) {
        throw Error(ErrorCode::InvalidArgument, "embedding dim must be positive");
    }
}

EmbeddingVector DeterministicEmbedder::embed(std::string_view text) const {
    text = apply_cap(text, max_text_bytes_, truncate_);
    std::vector<double> acc(dim_, 0.0);
    auto add = [&](std::string_view feature, double weight) {
        const std::uint64_t h = fnv1a64(feature);
        const std::size_t bucket = static_cast<std::size_t>(h % dim_);
        const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
        acc[bucket] += sign * weight;
    };

    const auto tokens = tokenize(text);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        add("1:" + tokens[i], 1.0);
        if (i + 1 < tokens.size()) {
            add("2:" + tokens[i] + " " + tokens[i + 1], kBigramWeight);
        }
    }

    double norm = 0;
    for (const double v : acc) {
        norm += v * v;
    }
    if (norm == 0) {
        // No tokens, or features cancelled out: fall back to a fixed sentinel axis.
        std::fill(acc.begin(), acc.end(), 0.0);
        add("0:<empty>", 1.0);
        norm = 1;
    }
    norm = std::sqrt(norm);

    EmbeddingVector out;
    out.values.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        out.values[i] = static_cast<float>(acc[i] / norm);
    }
    return out;
}

RemoteEmbedder::RemoteEmbedder(EmbeddingProviderConfig config) : config_(std::move(config)) {
    config_.validate();
}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) const {
    auto batch = embed_batch({std::string(text)});
    return std::move(batch.front());
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) const {
    if (texts.empty()) {
        return {};
    }
    nlohmann::json req;
    req["model"] = config_.model_name;
    req["input"] = nlohmann::json::array();
    for (const auto& t : texts) {
        req["input"].push_back(std::string(apply_cap(t, config_.max_text_bytes, config_.truncate_oversize)));
    }
    const auto res = http::post_json(config_.endpoint, req.dump(), {}, config_.timeout_ms);
    if (res.status != 200) {
        throw Error(ErrorCode::ProviderUnavailable, "embedding endpoint returned HTTP " + std::to_string(res.status));
    }
    std::vector<EmbeddingVector> out;
    try {
        const auto body = nlohmann::json::parse(res.body);
        const auto& vectors = body.at("vectors");
        if (!vectors.is_array() || vectors.size() != texts.size()) {
            throw Error(ErrorCode::EmbeddingFailure, "embedding response has wrong vector count");
        }
        for (const auto& v : vectors) {
            EmbeddingVector ev;
            ev.values = v.get<std::vector<float>>();
            if (ev.dim() != config_.dim) {
                throw Error(ErrorCode::EmbeddingFailure, "embedding response has wrong dimension");
            }
            for (const float f : ev.values) {
                if (!std::isfinite(f)) {
                    throw Error(ErrorCode::EmbeddingFailure, "embedding response contains non-finite value");
                }
            }
            out.push_back(std::move(ev));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::EmbeddingFailure, std::string("malformed embedding response: ") + e.what());
    }
    return out;
}

std::shared_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingProviderConfig& config) {
    config.validate();
    if (config.kind == EmbeddingProviderConfig::Kind::Remote) {
        return std::make_shared<RemoteEmbedder>(config);
    }
    return std::make_shared<DeterministicEmbedder>(config.dim, config.max_text_bytes, config.truncate_oversize);
}

} // namespace lsfs
