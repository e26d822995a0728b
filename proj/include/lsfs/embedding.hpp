#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace lsfs {

/// Unit-free dense vector. All vectors in one store share `dim`.
struct EmbeddingVector {
    std::vector<float> values;

    std::size_t dim() const { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

/// Cosine similarity in double precision; 0 when either side has zero norm.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct EmbeddingProviderConfig {
    enum class Kind { Remote, Deterministic };

    Kind kind = Kind::Deterministic;
    std::string endpoint;
    std::string model_name = "all-MiniLM-L6-v2";
    std::size_t dim = 384;
    std::int64_t timeout_ms = 10'000;
    std::size_t max_text_bytes = 1u << 20;
    /// When false, oversize input raises TextTooLarge instead of being cut.
    bool truncate_oversize = true;

    void validate() const;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dim() const = 0;
    virtual EmbeddingVector embed(std::string_view text) const = 0;
    /// Element-wise equal to embed(); any failure aborts the whole batch.
    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const;
};

/// Offline provider: token unigrams and bigrams hashed (FNV-1a, signed) into
/// `dim` buckets, then L2-normalized. Pure function of (text, dim).
class DeterministicEmbedder final : public EmbeddingProvider {
public:
    explicit DeterministicEmbedder(std::size_t dim = 384, std::size_t max_text_bytes = 1u << 20,
                                   bool truncate_oversize = true);

    std::size_t dim() const override { return dim_; }
    EmbeddingVector embed(std::string_view text) const override;

private:
    std::size_t dim_;
    std::size_t max_text_bytes_;
    bool truncate_;
};

/// HTTP client: POST {model, input[]} -> {vectors[][]}.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    explicit RemoteEmbedder(EmbeddingProviderConfig config);

    std::size_t dim() const override { return config_.dim; }
    EmbeddingVector embed(std::string_view text) const override;
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const override;

private:
    EmbeddingProviderConfig config_;
};

std::shared_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingProviderConfig& config);

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

} // namespace lsfs
