#ifndef CROSSTAG_FEATURES_HPP
#define CROSSTAG_FEATURES_HPP

#include <string>
#include <string_view>
#include <vector>

#include "crosstag/corpus.hpp"
#include "crosstag/embeddings.hpp"

namespace crosstag {

// Orthographic token indicators, computed on Unicode code points.
struct OrthoFlags {
    bool has_capital = false;
    bool has_hyphen = false;
    bool has_digit = false;
};

inline constexpr int kOrthoFlagCount = 3;
extern const char* const kOrthoFlagNames[kOrthoFlagCount];  // cap hyph digit

OrthoFlags ortho_flags(std::string_view token);

// Dense injective indexing of the feature universe. The template is fixed
// and identical for every language: per tag, three orthographic indicators
// and one feature per embedding dimension; plus tag-pair transitions.
//
// Layout (canonical order):
//   [0, T*3)                ortho        (tag, flag)
//   [T*3, T*3 + T*E)        embedding    (tag, dim)
//   [T*3 + T*E, m)          transition   (tag, previous tag)
class FeatureSpace {
public:
    FeatureSpace(Tagset tagset, int embedding_dims);

    const Tagset& tagset() const { return tagset_; }
    int num_tags() const { return tagset_.size(); }
    int embedding_dims() const { return emb_dims_; }
    int size() const { return size_; }

    int ortho(int tag, int flag) const { return tag * kOrthoFlagCount + flag; }
    int embedding(int tag, int dim) const { return ortho_end_ + tag * emb_dims_ + dim; }
    int transition(int tag, int previous_tag) const {
        return embed_end_ + tag * tagset_.size() + previous_tag;
    }

    // Stable text keys, e.g. "o:NOUN:cap", "e:NOUN:17", "t:NOUN:DET"
    // (transition keys are current:previous). Canonical key order is
    // dense index order.
    std::string key(int index) const;
    int index_of_key(std::string_view key, const std::string& context) const;

    bool operator==(const FeatureSpace& other) const {
        return tagset_ == other.tagset_ && emb_dims_ == other.emb_dims_;
    }
    bool operator!=(const FeatureSpace& other) const { return !(*this == other); }

private:
    Tagset tagset_;
    int emb_dims_;
    int ortho_end_;
    int embed_end_;
    int size_;
};

// Sparse vector over the feature space, sorted by index, no duplicates.
struct FeatureVector {
    std::vector<std::pair<int, double>> items;

    void add(int index, double value);  // accumulates into existing entries
    double dot(const std::vector<double>& weights) const;
    void sort_and_merge();
};

// Features active for one token under one tag: indicators for the token's
// true orthographic flags (value 1.0) and, for in-vocabulary tokens, one
// feature per embedding coordinate. OOV tokens contribute only ortho
// features.
FeatureVector emission_features(const FeatureSpace& space, std::string_view token, int tag,
                                const EmbeddingTable& emb);

// Sum over positions of emission features plus transition indicators for
// each adjacent tag pair, counted with multiplicity.
FeatureVector global_features(const FeatureSpace& space, const Sentence& sentence,
                              const std::vector<int>& tags, const EmbeddingTable& emb);

}  // namespace crosstag

#endif
