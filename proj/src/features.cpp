#include "crosstag/features.hpp"

#include <algorithm>

namespace crosstag {

const char* const kOrthoFlagNames[kOrthoFlagCount] = {"cap", "hyph", "digit"};

namespace {

// Decodes one UTF-8 code point starting at i; advances i. Invalid bytes are
// consumed one at a time and yield U+FFFD, so flags stay well defined on
// arbitrary input.
char32_t next_code_point(std::string_view s, std::size_t& i) {
    unsigned char b0 = static_cast<unsigned char>(s[i]);
    int len = 1;
    char32_t cp = 0xFFFD;
    if (b0 < 0x80) {
        cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return 0xFFFD;
    }
    if (i + len > s.size()) {
        ++i;
        return 0xFFFD;
    }
    for (int k = 1; k < len; ++k) {
        unsigned char b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    i += len;
    return cp;
}

bool is_uppercase(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return true;
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return true;  // Latin-1 capitals
    // Latin Extended-A comes in case pairs whose parity flips twice.
    if (cp >= 0x0100 && cp <= 0x0137) return (cp & 1) == 0;
    if (cp >= 0x0139 && cp <= 0x0148) return (cp & 1) == 1;
    if (cp >= 0x014A && cp <= 0x0177) return (cp & 1) == 0;
    if (cp == 0x0178 || cp == 0x0179 || cp == 0x017B || cp == 0x017D) return true;
    if (cp >= 0x0391 && cp <= 0x03A9 && cp != 0x03A2) return true;  // Greek capitals
    if (cp >= 0x0400 && cp <= 0x042F) return true;                  // Cyrillic capitals
    return false;
}

bool is_dash(char32_t cp) {
    if (cp == U'-') return true;                    // hyphen-minus
    if (cp >= 0x2010 && cp <= 0x2015) return true;  // hyphen .. horizontal bar
    return cp == 0x2212;                            // minus sign
}

bool is_decimal_digit(char32_t cp) {
    if (cp >= U'0' && cp <= U'9') return true;
    if (cp >= 0x0660 && cp <= 0x0669) return true;  // Arabic-Indic
    if (cp >= 0x06F0 && cp <= 0x06F9) return true;  // extended Arabic-Indic
    if (cp >= 0x0966 && cp <= 0x096F) return true;  // Devanagari
    if (cp >= 0xFF10 && cp <= 0xFF19) return true;  // fullwidth
    return false;
}

}  // namespace

OrthoFlags ortho_flags(std::string_view token) {
    if (token.empty()) throw DataError("ortho flags of an empty token");
    OrthoFlags flags;
    std::size_t i = 0;
    while (i < token.size()) {
        char32_t cp = next_code_point(token, i);
        flags.has_capital = flags.has_capital || is_uppercase(cp);
        flags.has_hyphen = flags.has_hyphen || is_dash(cp);
        flags.has_digit = flags.has_digit || is_decimal_digit(cp);
    }
    return flags;
}

FeatureSpace::FeatureSpace(Tagset tagset, int embedding_dims)
    : tagset_(std::move(tagset)), emb_dims_(embedding_dims) {
    if (emb_dims_ < 0) throw DataError("negative embedding dimension");
    const int t = tagset_.size();
    ortho_end_ = t * kOrthoFlagCount;
    embed_end_ = ortho_end_ + t * emb_dims_;
    size_ = embed_end_ + t * t;
}

std::string FeatureSpace::key(int index) const {
    if (index < 0 || index >= size_) throw DataError("feature index out of range");
    if (index < ortho_end_) {
        int tag = index / kOrthoFlagCount;
        int flag = index % kOrthoFlagCount;
        return "o:" + tagset_.name(tag) + ":" + kOrthoFlagNames[flag];
    }
    if (index < embed_end_) {
        int rel = index - ortho_end_;
        int tag = rel / emb_dims_;
        int dim = rel % emb_dims_;
        return "e:" + tagset_.name(tag) + ":" + std::to_string(dim);
    }
    int rel = index - embed_end_;
    int tag = rel / tagset_.size();
    int prev = rel % tagset_.size();
    return "t:" + tagset_.name(tag) + ":" + tagset_.name(prev);
}

int FeatureSpace::index_of_key(std::string_view key, const std::string& context) const {
    auto fields = split(key, ':');
    if (fields.size() != 3) throw DataError(context + ": bad feature key '" + std::string(key) + "'");
    int tag = tagset_.index_or_throw(fields[1], context);
    if (fields[0] == "o") {
        for (int f = 0; f < kOrthoFlagCount; ++f) {
            if (fields[2] == kOrthoFlagNames[f]) return ortho(tag, f);
        }
        throw DataError(context + ": unknown ortho flag '" + std::string(fields[2]) + "'");
    }
    if (fields[0] == "e") {
        long dim = parse_long(fields[2], context);
        if (dim < 0 || dim >= emb_dims_) {
            throw DataError(context + ": embedding dimension out of range in '" + std::string(key) + "'");
        }
        return embedding(tag, static_cast<int>(dim));
    }
    if (fields[0] == "t") {
        int prev = tagset_.index_or_throw(fields[2], context);
        return transition(tag, prev);
    }
    throw DataError(context + ": unknown feature kind '" + std::string(fields[0]) + "'");
}

void FeatureVector::add(int index, double value) {
    items.emplace_back(index, value);
}

void FeatureVector::sort_and_merge() {
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < items.size();) {
        int index = items[i].first;
        double value = 0.0;
        while (i < items.size() && items[i].first == index) {
            value += items[i].second;
            ++i;
        }
        items[out++] = {index, value};
    }
    items.resize(out);
}

double FeatureVector::dot(const std::vector<double>& weights) const {
    double sum = 0.0;
    for (const auto& [index, value] : items) sum += weights[index] * value;
    return sum;
}

FeatureVector emission_features(const FeatureSpace& space, std::string_view token, int tag,
                                const EmbeddingTable& emb) {
    if (tag < 0 || tag >= space.num_tags()) throw DataError("tag index out of range");
    FeatureVector fv;
    OrthoFlags flags = ortho_flags(token);
    if (flags.has_capital) fv.add(space.ortho(tag, 0), 1.0);
    if (flags.has_hyphen) fv.add(space.ortho(tag, 1), 1.0);
    if (flags.has_digit) fv.add(space.ortho(tag, 2), 1.0);
    if (const double* vec = emb.find(token)) {
        if (emb.dims() != space.embedding_dims()) {
            throw DataError("embedding table dimension does not match feature space");
        }
        for (int d = 0; d < space.embedding_dims(); ++d) {
            fv.add(space.embedding(tag, d), vec[d]);
        }
    }
    fv.sort_and_merge();
    return fv;
}

FeatureVector global_features(const FeatureSpace& space, const Sentence& sentence,
                              const std::vector<int>& tags, const EmbeddingTable& emb) {
    if (tags.size() != sentence.size()) throw DataError("tag sequence length mismatch");
    FeatureVector fv;
    for (std::size_t t = 0; t < sentence.size(); ++t) {
        FeatureVector local = emission_features(space, sentence.tokens[t], tags[t], emb);
        fv.items.insert(fv.items.end(), local.items.begin(), local.items.end());
        if (t >= 1) fv.add(space.transition(tags[t], tags[t - 1]), 1.0);
    }
    fv.sort_and_merge();
    return fv;
}

}  // namespace crosstag
