#include "crosstag/embeddings.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace crosstag {

EmbeddingTable::EmbeddingTable(int dims) : dims_(dims) {
    // dims 0 is the legitimate "no embeddings" table; building vectors from
    // a verse corpus still requires at least one dimension.
    if (dims < 0) throw DataError("negative embedding dimension");
}

void EmbeddingTable::insert(std::string word, std::vector<double> vector) {
    if (static_cast<int>(vector.size()) != dims_) {
        throw DataError("embedding for '" + word + "' has wrong dimension");
    }
    auto [it, inserted] = index_.emplace(std::move(word), words_.size());
    if (!inserted) throw DataError("duplicate embedding for '" + it->first + "'");
    words_.push_back(it->first);
    data_.insert(data_.end(), vector.begin(), vector.end());
}

const double* EmbeddingTable::find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return nullptr;
    return data_.data() + it->second * dims_;
}

void VerseCorpus::add(const std::string& verse_id, const std::string& lang,
                      const std::vector<std::string_view>& tokens) {
    auto [it, inserted] = verse_index_.emplace(verse_id, static_cast<std::int32_t>(verse_ids_.size()));
    if (inserted) verse_ids_.push_back(verse_id);
    std::int32_t column = it->second;
    for (auto token : tokens) {
        std::string key = lang + ":" + std::string(token);
        types_[std::move(key)].push_back(column);
    }
}

VerseCorpus::Occurrences VerseCorpus::occurrences() const {
    Occurrences occ;
    occ.verse_count = verse_ids_.size();

    // Canonical column order: sorted verse ids.
    std::vector<std::int32_t> order(verse_ids_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::int32_t>(i);
    std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        return verse_ids_[a] < verse_ids_[b];
    });
    std::vector<std::int32_t> remap(verse_ids_.size());
    for (std::size_t i = 0; i < order.size(); ++i) remap[order[i]] = static_cast<std::int32_t>(i);

    occ.row_keys.reserve(types_.size());
    for (const auto& [key, verses] : types_) occ.row_keys.push_back(key);
    std::sort(occ.row_keys.begin(), occ.row_keys.end());

    occ.row_verses.reserve(occ.row_keys.size());
    for (const auto& key : occ.row_keys) {
        std::vector<std::int32_t> cols = types_.at(key);
        for (auto& c : cols) c = remap[c];
        std::sort(cols.begin(), cols.end());
        cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
        occ.row_verses.push_back(std::move(cols));
    }
    return occ;
}

VerseCorpus read_verses(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    VerseCorpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": expected 'verse<TAB>lang<TAB>text'");
        }
        auto tokens = split_ws(fields[2]);
        if (tokens.empty()) continue;
        corpus.add(std::string(fields[0]), std::string(fields[1]), tokens);
    }
    return corpus;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Products with the column-mean-centered occurrence matrix A = M - 1*mean^T,
// where M is the sparse binary word-by-verse matrix.
struct CenteredMatrix {
    const VerseCorpus::Occurrences& occ;
    VectorXd column_mean;  // per verse

    explicit CenteredMatrix(const VerseCorpus::Occurrences& occurrences)
        : occ(occurrences), column_mean(VectorXd::Zero(static_cast<Eigen::Index>(occ.verse_count))) {
        for (const auto& verses : occ.row_verses) {
            for (auto c : verses) column_mean[c] += 1.0;
        }
        column_mean /= static_cast<double>(occ.row_verses.size());
    }

    Eigen::Index rows() const { return static_cast<Eigen::Index>(occ.row_verses.size()); }
    Eigen::Index cols() const { return static_cast<Eigen::Index>(occ.verse_count); }

    MatrixXd multiply(const MatrixXd& x) const {
        MatrixXd out = MatrixXd::Zero(rows(), x.cols());
        for (Eigen::Index r = 0; r < rows(); ++r) {
            for (auto c : occ.row_verses[r]) out.row(r) += x.row(c);
        }
        Eigen::RowVectorXd shift = column_mean.transpose() * x;
        out.rowwise() -= shift;
        return out;
    }

    MatrixXd multiply_transposed(const MatrixXd& y) const {
        MatrixXd out = MatrixXd::Zero(cols(), y.cols());
        for (Eigen::Index r = 0; r < rows(); ++r) {
            for (auto c : occ.row_verses[r]) out.row(c) += y.row(r);
        }
        out -= column_mean * y.colwise().sum();
        return out;
    }
};

MatrixXd thin_q(const MatrixXd& x) {
    Eigen::HouseholderQR<MatrixXd> qr(x);
    Eigen::Index k = std::min(x.rows(), x.cols());
    return qr.householderQ() * MatrixXd::Identity(x.rows(), k);
}

}  // namespace

EmbeddingBuild build_embeddings_full(const VerseCorpus& corpus, int dims, std::uint64_t seed) {
    if (dims < 1) throw DataError("embedding dimension must be positive");
    if (corpus.type_count() == 0) throw DataError("empty verse corpus");
    if (corpus.verse_count() < static_cast<std::size_t>(dims)) {
        throw DataError("corpus has " + std::to_string(corpus.verse_count()) +
                        " verses, fewer than the requested " + std::to_string(dims) + " dimensions");
    }

    auto occ = corpus.occurrences();
    CenteredMatrix a(occ);
    const Eigen::Index n_rows = a.rows();
    const Eigen::Index n_cols = a.cols();

    // Subspace iteration on a randomly seeded block. When the oversampled
    // block spans the whole column space the factorization is exact.
    const Eigen::Index block = std::min<Eigen::Index>(dims + 8, std::min(n_rows, n_cols));
    const int power_iterations = 4;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatrixXd omega(n_cols, block);
    for (Eigen::Index i = 0; i < n_cols; ++i) {
        for (Eigen::Index j = 0; j < block; ++j) omega(i, j) = gauss(rng);
    }

    MatrixXd q = thin_q(a.multiply(omega));
    for (int it = 0; it < power_iterations; ++it) {
        MatrixXd z = thin_q(a.multiply_transposed(q));
        q = thin_q(a.multiply(z));
    }

    // B = Q^T A, factored densely at block size.
    MatrixXd b = a.multiply_transposed(q).transpose();
    Eigen::JacobiSVD<MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);

    const Eigen::Index found = std::min<Eigen::Index>(dims, svd.singularValues().size());
    MatrixXd projected = q * svd.matrixU().leftCols(found);  // n_rows x found

    EmbeddingBuild build{EmbeddingTable(dims),
                         std::vector<double>(static_cast<std::size_t>(dims), 0.0),
                         {}};
    for (Eigen::Index j = 0; j < found; ++j) build.singular_values[j] = svd.singularValues()[j];
    build.row_norms.reserve(static_cast<std::size_t>(n_rows));

    std::vector<double> row(static_cast<std::size_t>(dims));
    for (Eigen::Index r = 0; r < n_rows; ++r) {
        double norm_sq = 0.0;
        for (int d = 0; d < dims; ++d) {
            double v = d < found ? projected(r, d) * build.singular_values[d] : 0.0;
            row[d] = v;
            norm_sq += v * v;
        }
        double norm = std::sqrt(norm_sq);
        if (norm > 1e-12) {
            for (auto& v : row) v /= norm;
        } else {
            norm = 0.0;
            std::fill(row.begin(), row.end(), 0.0);
        }
        build.row_norms.push_back(norm);
        build.table.insert(occ.row_keys[r], row);
    }
    return build;
}

EmbeddingTable build_embeddings(const VerseCorpus& corpus, int dims, std::uint64_t seed) {
    return build_embeddings_full(corpus, dims, seed).table;
}

void write_embeddings(const EmbeddingTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    for (std::size_t r = 0; r < table.size(); ++r) {
        out << table.words()[r] << '\t';
        const double* v = table.vector(r);
        for (int d = 0; d < table.dims(); ++d) {
            if (d) out << ' ';
            out << fmt_double(v[d]);
        }
        out << '\n';
    }
}

EmbeddingTable load_embeddings(const std::string& path, const std::string& lang_filter) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    const std::string prefix = lang_filter.empty() ? "" : lang_filter + ":";

    EmbeddingTable* table = nullptr;
    EmbeddingTable storage(1);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        auto fields = split(line, '\t');
        if (fields.size() != 2 || fields[0].empty()) {
            throw DataError(where + ": expected 'word<TAB>values'");
        }
        auto values = split_ws(fields[1]);
        if (values.empty()) throw DataError(where + ": no embedding values");
        if (table == nullptr) {
            storage = EmbeddingTable(static_cast<int>(values.size()));
            table = &storage;
        } else if (static_cast<int>(values.size()) != table->dims()) {
            throw DataError(where + ": inconsistent embedding dimension");
        }
        std::string key(fields[0]);
        if (!prefix.empty()) {
            if (key.rfind(prefix, 0) != 0) continue;
            key = key.substr(prefix.size());
        }
        std::vector<double> row;
        row.reserve(values.size());
        for (auto v : values) row.push_back(parse_double(v, where));
        table->insert(std::move(key), std::move(row));
    }
    if (table == nullptr) throw DataError(path + ": no embeddings");
    return storage;
}

}  // namespace crosstag
