#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "toonshade/errors.hpp"
#include "toonshade/tensor.hpp"
#include "toonshade/tensor_io.hpp"

namespace toonshade {

enum class PromptSource { positive_text, negative_inversion, zero };

// Token embedding matrix handed to the denoiser, (token count x dim).
struct PromptEmbedding {
    int token_count = 0;
    int dim = 0;
    std::vector<float> values;  // token-major
    PromptSource source = PromptSource::zero;

    static PromptEmbedding zero_tokens(int tokens, int dim) {
        require(tokens >= 1 && dim >= 1, ErrorKind::parameter,
                "embedding must have at least one token and one dimension");
        PromptEmbedding e;
        e.token_count = tokens;
        e.dim = dim;
        e.values.assign(static_cast<size_t>(tokens) * dim, 0.0f);
        e.source = PromptSource::zero;
        return e;
    }

    // (1, tokens, 1, dim) tensor, the on-disk layout of embedding files.
    Tensor4 as_tensor() const {
        return Tensor4({1, token_count, 1, dim}, values);
    }
};

struct GuidanceConfig {
    double scale = 7.0;
    bool clip_skip_final_attention = true;
};

// Text-encoder plugin slot. The truncation flag is forwarded as an opaque
// encoder option; what it does is entirely the encoder's business.
class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    virtual PromptEmbedding encode(std::string_view text, bool skip_final_attention) = 0;
    virtual int embedding_dim() const = 0;
};

// Classifier-free guidance: g*positive + (1-g)*negative.
inline Tensor4 apply_cfg(const Tensor4& positive, const Tensor4& negative, double scale) {
    return lincomb(scale, positive, 1.0 - scale, negative);
}

inline constexpr int kNegativeEmbeddingTokens = 10;

// Loads the 10-token negative inversion embedding from a tensor file of
// shape (1, 10, 1, dim); a zero embedding stands in when no file is given.
inline PromptEmbedding load_negative_embedding(const std::filesystem::path& path) {
    const Tensor4 t = read_tensor_file(path);
    const auto& s = t.shape();
    require(s.frames == 1 && s.width == 1, ErrorKind::format,
            "negative embedding file must have shape (1, tokens, 1, dim), got " + s.str());
    require(s.height == kNegativeEmbeddingTokens, ErrorKind::format,
            "negative embedding: expected 10 tokens, got " + std::to_string(s.height));
    PromptEmbedding e;
    e.token_count = static_cast<int>(s.height);
    e.dim = static_cast<int>(s.channels);
    e.values.assign(t.values().begin(), t.values().end());
    e.source = PromptSource::negative_inversion;
    return e;
}

inline std::pair<PromptEmbedding, PromptEmbedding> encode_prompts(
    TextEncoder& encoder, std::string_view positive_text,
    const std::optional<std::filesystem::path>& negative_embedding_file,
    const GuidanceConfig& config) {
    PromptEmbedding positive = encoder.encode(positive_text, config.clip_skip_final_attention);
    positive.source = PromptSource::positive_text;
    PromptEmbedding negative =
        negative_embedding_file
            ? load_negative_embedding(*negative_embedding_file)
            : PromptEmbedding::zero_tokens(kNegativeEmbeddingTokens, positive.dim);
    return {std::move(positive), std::move(negative)};
}

}  // namespace toonshade
