#ifndef CROSSTAG_EMBEDDINGS_HPP
#define CROSSTAG_EMBEDDINGS_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crosstag/common.hpp"

namespace crosstag {

// Word vectors shared across languages. Out-of-vocabulary words map to the
// zero vector, which keeps their emission score contribution null.
class EmbeddingTable {
public:
    explicit EmbeddingTable(int dims);

    int dims() const { return dims_; }
    std::size_t size() const { return words_.size(); }

    void insert(std::string word, std::vector<double> vector);

    // nullptr when out of vocabulary.
    const double* find(std::string_view word) const;

    // Words in insertion order; the builder and reader keep this canonical.
    const std::vector<std::string>& words() const { return words_; }
    const double* vector(std::size_t row) const { return data_.data() + row * dims_; }

private:
    int dims_;
    std::vector<std::string> words_;
    std::vector<double> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

// A multi-parallel corpus keyed by verse id: each verse holds the word
// types occurring in it, per language.
class VerseCorpus {
public:
    void add(const std::string& verse_id, const std::string& lang,
             const std::vector<std::string_view>& tokens);

    std::size_t verse_count() const { return verse_ids_.size(); }
    std::size_t type_count() const { return types_.size(); }

    // Occurrence lists with rows (= "lang:word" types) and columns
    // (= verses) in sorted-key order, so the matrix layout is canonical.
    struct Occurrences {
        std::vector<std::string> row_keys;                // lang:word
        std::vector<std::vector<std::int32_t>> row_verses;  // sorted column ids per row
        std::size_t verse_count = 0;
    };
    Occurrences occurrences() const;

private:
    std::vector<std::string> verse_ids_;
    std::unordered_map<std::string, std::int32_t> verse_index_;
    // type key -> set of verse columns (kept as sorted-unique vector lazily)
    std::unordered_map<std::string, std::vector<std::int32_t>> types_;
};

// One "verse_id<TAB>lang<TAB>space-tokenized text" line per (verse, language).
VerseCorpus read_verses(const std::string& path);

// Inverted-indexing embeddings: binary word-by-verse occurrence matrix,
// column mean-centering, rank-`dims` truncated SVD, rows of U*Sigma
// normalized to unit Euclidean length (zero rows stay zero).
EmbeddingTable build_embeddings(const VerseCorpus& corpus, int dims, std::uint64_t seed);

// Singular values of the truncated factorization, non-increasing, plus the
// pre-normalization row lengths (so U*Sigma can be reconstructed as
// row_norms[r] * table row r).
struct EmbeddingBuild {
    EmbeddingTable table;
    std::vector<double> singular_values;
    std::vector<double> row_norms;
};
EmbeddingBuild build_embeddings_full(const VerseCorpus& corpus, int dims, std::uint64_t seed);

// One "word<TAB>d1 d2 ... dk" line per word.
void write_embeddings(const EmbeddingTable& table, const std::string& path);

// When lang_filter is non-empty, keeps only rows whose "lang:" prefix
// matches and strips the prefix, so corpus tokens can be looked up directly.
EmbeddingTable load_embeddings(const std::string& path, const std::string& lang_filter = "");

}  // namespace crosstag

#endif
