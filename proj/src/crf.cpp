#include "crosstag/crf.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

namespace crosstag {

namespace {

double logsumexp(const double* values, int count) {
    double best = values[0];
    for (int i = 1; i < count; ++i) best = std::max(best, values[i]);
    double sum = 0.0;
    for (int i = 0; i < count; ++i) sum += std::exp(values[i] - best);
    return best + std::log(sum);
}

// Per-position active emission inputs: which ortho flags fire and the
// token's embedding row (nullptr when OOV).
struct PositionFeatures {
    bool flags[kOrthoFlagCount];
    const double* embedding;
};

std::vector<PositionFeatures> position_features(const Sentence& sentence,
                                                const EmbeddingTable& emb) {
    std::vector<PositionFeatures> out(sentence.size());
    for (std::size_t t = 0; t < sentence.size(); ++t) {
        OrthoFlags flags = ortho_flags(sentence.tokens[t]);
        out[t] = {{flags.has_capital, flags.has_hyphen, flags.has_digit}, emb.find(sentence.tokens[t])};
    }
    return out;
}

double emission_score(const FeatureSpace& space, const std::vector<double>& w,
                      const PositionFeatures& pos, int tag) {
    double score = 0.0;
    for (int f = 0; f < kOrthoFlagCount; ++f) {
        if (pos.flags[f]) score += w[space.ortho(tag, f)];
    }
    if (pos.embedding != nullptr) {
        const int dims = space.embedding_dims();
        const double* e = pos.embedding;
        for (int d = 0; d < dims; ++d) score += w[space.embedding(tag, d)] * e[d];
    }
    return score;
}

// Splits sentence indices into contiguous chunks and reduces partial
// results in chunk order, so a given thread count is deterministic and
// threads == 1 is exactly sequential.
template <typename Partial, typename Work, typename Merge>
Partial chunked_reduce(std::size_t count, int threads, Work work, Merge merge) {
    if (threads < 1) threads = 1;
    std::size_t chunks = std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(count, 1));
    if (chunks <= 1) return work(0, count);

    std::vector<std::future<Partial>> futures;
    futures.reserve(chunks);
    std::size_t base = count / chunks;
    std::size_t extra = count % chunks;
    std::size_t begin = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
        std::size_t end = begin + base + (c < extra ? 1 : 0);
        futures.push_back(std::async(std::launch::async, [=]() { return work(begin, end); }));
        begin = end;
    }
    Partial total = futures[0].get();
    for (std::size_t c = 1; c < chunks; ++c) merge(total, futures[c].get());
    return total;
}

}  // namespace

Lattice::Lattice(const Sentence& sentence, const FeatureModel& model, const EmbeddingTable& emb)
    : n_(static_cast<int>(sentence.size())), num_tags_(model.space.num_tags()) {
    const FeatureSpace& space = model.space;
    const std::vector<double>& w = model.weights;
    const int T = num_tags_;

    auto positions = position_features(sentence, emb);
    node_.resize(static_cast<std::size_t>(n_) * T);
    for (int t = 0; t < n_; ++t) {
        for (int y = 0; y < T; ++y) node_[t * T + y] = emission_score(space, w, positions[t], y);
    }
    trans_.resize(static_cast<std::size_t>(T) * T);
    for (int prev = 0; prev < T; ++prev) {
        for (int cur = 0; cur < T; ++cur) trans_[prev * T + cur] = w[space.transition(cur, prev)];
    }

    alpha_.resize(node_.size());
    beta_.resize(node_.size());
    std::vector<double> scratch(T);

    for (int y = 0; y < T; ++y) alpha_[y] = node_[y];
    for (int t = 1; t < n_; ++t) {
        for (int y = 0; y < T; ++y) {
            for (int p = 0; p < T; ++p) scratch[p] = alpha_[(t - 1) * T + p] + trans_[p * T + y];
            alpha_[t * T + y] = logsumexp(scratch.data(), T) + node_[t * T + y];
        }
    }

    for (int y = 0; y < T; ++y) beta_[(n_ - 1) * T + y] = 0.0;
    for (int t = n_ - 2; t >= 0; --t) {
        for (int y = 0; y < T; ++y) {
            for (int c = 0; c < T; ++c) {
                scratch[c] = trans_[y * T + c] + node_[(t + 1) * T + c] + beta_[(t + 1) * T + c];
            }
            beta_[t * T + y] = logsumexp(scratch.data(), T);
        }
    }

    log_z_ = logsumexp(alpha_.data() + (n_ - 1) * T, T);
}

double Lattice::log_partition_backward() const {
    std::vector<double> scratch(num_tags_);
    for (int y = 0; y < num_tags_; ++y) scratch[y] = node_[y] + beta_[y];
    return logsumexp(scratch.data(), num_tags_);
}

double Lattice::path_score(const std::vector<int>& tags) const {
    if (static_cast<int>(tags.size()) != n_) throw DataError("path length mismatch");
    double score = node_[tags[0]];
    for (int t = 1; t < n_; ++t) {
        score += trans_[tags[t - 1] * num_tags_ + tags[t]] + node_[t * num_tags_ + tags[t]];
    }
    return score;
}

double Lattice::node_marginal(int t, int tag) const {
    return std::exp(alpha_[t * num_tags_ + tag] + beta_[t * num_tags_ + tag] - log_z_);
}

double Lattice::edge_marginal(int t, int prev, int cur) const {
    return std::exp(alpha_[t * num_tags_ + prev] + trans_[prev * num_tags_ + cur] +
                    node_[(t + 1) * num_tags_ + cur] + beta_[(t + 1) * num_tags_ + cur] - log_z_);
}

Lattice build_lattice(const Sentence& sentence, const FeatureModel& model,
                      const EmbeddingTable& emb) {
    return Lattice(sentence, model, emb);
}

double log_likelihood(const FeatureModel& model, const TaggedCorpus& corpus,
                      const EmbeddingTable& emb, int threads) {
    const auto& sentences = corpus.sentences();
    auto work = [&](std::size_t begin, std::size_t end) {
        double sum = 0.0;
        for (std::size_t s = begin; s < end; ++s) {
            Lattice lattice(sentences[s].sentence, model, emb);
            sum += lattice.path_score(sentences[s].tags) - lattice.log_partition();
        }
        return sum;
    };
    return chunked_reduce<double>(sentences.size(), threads, work,
                                  [](double& a, double b) { a += b; });
}

namespace {

// Accumulates per-chunk log-likelihood and gradient together.
struct LikelihoodParts {
    double log_likelihood = 0.0;
    std::vector<double> grad;
};

LikelihoodParts likelihood_chunks(const FeatureModel& model, const TaggedCorpus& corpus,
                                  const EmbeddingTable& emb, int threads) {
    const FeatureSpace& space = model.space;
    const auto& sentences = corpus.sentences();
    const int T = space.num_tags();
    const int dims = space.embedding_dims();

    auto work = [&](std::size_t begin, std::size_t end) {
        LikelihoodParts parts;
        parts.grad.assign(static_cast<std::size_t>(space.size()), 0.0);
        std::vector<double>& grad = parts.grad;
        for (std::size_t s = begin; s < end; ++s) {
            const Sentence& x = sentences[s].sentence;
            const std::vector<int>& gold = sentences[s].tags;
            const int n = static_cast<int>(x.size());
            auto positions = position_features(x, emb);

            // Observed counts.
            for (int t = 0; t < n; ++t) {
                const auto& pos = positions[t];
                for (int f = 0; f < kOrthoFlagCount; ++f) {
                    if (pos.flags[f]) grad[space.ortho(gold[t], f)] += 1.0;
                }
                if (pos.embedding != nullptr) {
                    for (int d = 0; d < dims; ++d) {
                        grad[space.embedding(gold[t], d)] += pos.embedding[d];
                    }
                }
                if (t >= 1) grad[space.transition(gold[t], gold[t - 1])] += 1.0;
            }

            // Expected counts under the model posterior.
            Lattice lattice(x, model, emb);
            for (int t = 0; t < n; ++t) {
                const auto& pos = positions[t];
                for (int y = 0; y < T; ++y) {
                    double p = lattice.node_marginal(t, y);
                    for (int f = 0; f < kOrthoFlagCount; ++f) {
                        if (pos.flags[f]) grad[space.ortho(y, f)] -= p;
                    }
                    if (pos.embedding != nullptr) {
                        for (int d = 0; d < dims; ++d) {
                            grad[space.embedding(y, d)] -= p * pos.embedding[d];
                        }
                    }
                }
            }
            for (int t = 0; t + 1 < n; ++t) {
                for (int prev = 0; prev < T; ++prev) {
                    for (int cur = 0; cur < T; ++cur) {
                        grad[space.transition(cur, prev)] -= lattice.edge_marginal(t, prev, cur);
                    }
                }
            }
            parts.log_likelihood += lattice.path_score(gold) - lattice.log_partition();
        }
        return parts;
    };
    auto merge = [](LikelihoodParts& a, const LikelihoodParts& b) {
        a.log_likelihood += b.log_likelihood;
        for (std::size_t j = 0; j < a.grad.size(); ++j) a.grad[j] += b.grad[j];
    };
    return chunked_reduce<LikelihoodParts>(sentences.size(), threads, work, merge);
}

}  // namespace

std::vector<double> gradient_log_likelihood(const FeatureModel& model, const TaggedCorpus& corpus,
                                            const EmbeddingTable& emb, int threads) {
    return likelihood_chunks(model, corpus, emb, threads).grad;
}

double log_likelihood_and_gradient(const FeatureModel& model, const TaggedCorpus& corpus,
                                   const EmbeddingTable& emb, std::vector<double>& grad,
                                   int threads) {
    LikelihoodParts parts = likelihood_chunks(model, corpus, emb, threads);
    grad = std::move(parts.grad);
    return parts.log_likelihood;
}

std::vector<int> viterbi(const Sentence& sentence, const FeatureModel& model,
                         const EmbeddingTable& emb) {
    Lattice lattice(sentence, model, emb);
    const int n = lattice.length();
    const int T = lattice.num_tags();

    // Backward max messages: best completion score from (t, tag) onward.
    std::vector<double> rho(static_cast<std::size_t>(n) * T, 0.0);
    for (int t = n - 2; t >= 0; --t) {
        for (int y = 0; y < T; ++y) {
            double best = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < T; ++c) {
                best = std::max(best, lattice.transition_score(y, c) + lattice.node_score(t + 1, c) +
                                          rho[(t + 1) * T + c]);
            }
            rho[t * T + y] = best;
        }
    }

    // Greedy left-to-right reconstruction against the stored maxima picks
    // the lexicographically smallest optimal sequence. The equality tests
    // are exact: each candidate is the same float the max was taken over.
    std::vector<int> tags(n);
    double best = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < T; ++y) best = std::max(best, lattice.node_score(0, y) + rho[y]);
    for (int y = 0; y < T; ++y) {
        if (lattice.node_score(0, y) + rho[y] == best) {
            tags[0] = y;
            break;
        }
    }
    for (int t = 1; t < n; ++t) {
        const int prev = tags[t - 1];
        const double target = rho[(t - 1) * T + prev];
        for (int y = 0; y < T; ++y) {
            if (lattice.transition_score(prev, y) + lattice.node_score(t, y) + rho[t * T + y] ==
                target) {
                tags[t] = y;
                break;
            }
        }
    }
    return tags;
}

}  // namespace crosstag
