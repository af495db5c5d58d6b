#include "crosstag/perceptron.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crosstag/crf.hpp"
#include "crosstag/features.hpp"

namespace crosstag {

namespace {

// Weights factored as w = scale * v so a global decay is O(1), plus a lazily
// flushed running sum of the per-step snapshots for the final average. v_j
// is constant between touches, so its contribution to the snapshot sum is
// v_j times the growth of the prefix sum of scales since it was last
// flushed.
class AveragedWeights {
public:
    explicit AveragedWeights(std::vector<double> initial)
        : v_(std::move(initial)), acc_(v_.size(), 0.0), last_prefix_(v_.size(), 0.0) {}

    void fill_weights(std::vector<double>& out) const {
        out.resize(v_.size());
        for (std::size_t j = 0; j < v_.size(); ++j) out[j] = scale_ * v_[j];
    }

    void add(std::size_t j, double delta) {
        flush(j);
        v_[j] += delta / scale_;
    }

    void decay(double factor) {
        scale_ *= factor;
        if (scale_ < 1e-8) renormalize();
    }

    // Close out one instance: account the current weights into the snapshot
    // sum. Updates and decay for the instance must already be applied.
    void end_step() {
        prefix_ += scale_;
        ++steps_;
    }

    std::vector<double> average() const {
        std::vector<double> avg(v_.size(), 0.0);
        if (steps_ == 0) {
            for (std::size_t j = 0; j < v_.size(); ++j) avg[j] = scale_ * v_[j];
            return avg;
        }
        const double n = static_cast<double>(steps_);
        for (std::size_t j = 0; j < v_.size(); ++j) {
            avg[j] = (acc_[j] + v_[j] * (prefix_ - last_prefix_[j])) / n;
        }
        return avg;
    }

private:
    void flush(std::size_t j) {
        acc_[j] += v_[j] * (prefix_ - last_prefix_[j]);
        last_prefix_[j] = prefix_;
    }

    void renormalize() {
        for (std::size_t j = 0; j < v_.size(); ++j) flush(j);
        for (auto& x : v_) x *= scale_;
        scale_ = 1.0;
    }

    std::vector<double> v_;
    std::vector<double> acc_;
    std::vector<double> last_prefix_;
    double scale_ = 1.0;
    double prefix_ = 0.0;  // sum of scale over completed steps
    long long steps_ = 0;
};

void check_config(const PerceptronConfig& config) {
    if (config.epochs < 1) throw DataError("perceptron epochs must be at least 1");
    if (!(config.decay >= 0.0 && config.decay < 1.0)) {
        throw DataError("perceptron decay must lie in [0, 1)");
    }
}

// In-place Fisher-Yates; hand-rolled so the order is engine-defined only.
void shuffle_order(std::vector<std::size_t>& order, std::mt19937_64& rng) {
    for (std::size_t i = order.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
}

FeatureModel run_perceptron(const TaggedCorpus& corpus, const EmbeddingTable& emb,
                            const PerceptronConfig& config, const FeatureSpace& space,
                            std::vector<double> start, const GaussianPrior* noise, double decay,
                            PerceptronStats* stats) {
    check_config(config);
    if (corpus.empty()) throw DataError("training corpus is empty");

    AveragedWeights weights(std::move(start));
    FeatureModel scratch(space);
    std::vector<double> multiplier;  // dense view of g, 1.0 when inactive
    if (noise) multiplier.assign(static_cast<std::size_t>(space.size()), 1.0);

    std::mt19937_64 shuffle_rng(mix_seed(config.seed, 1));
    std::mt19937_64 noise_rng(mix_seed(config.seed, 2));

    if (stats) *stats = PerceptronStats{};
    const double factor = 1.0 - decay;

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle) shuffle_order(order, shuffle_rng);
        long long mistakes = 0;
        for (std::size_t pos : order) {
            const TaggedSentence& instance = corpus.sentences()[pos];

            CorruptionVector g;
            weights.fill_weights(scratch.weights);
            if (noise) {
                g = sample_corruption(*noise, active_features(space, instance.sentence, emb),
                                      noise_rng);
                for (std::size_t i = 0; i < g.indices.size(); ++i) {
                    scratch.weights[static_cast<std::size_t>(g.indices[i])] *= g.values[i];
                }
            }

            std::vector<int> predicted = viterbi(instance.sentence, scratch, emb);
            if (predicted != instance.tags) {
                ++mistakes;
                FeatureVector gold_f =
                    global_features(space, instance.sentence, instance.tags, emb);
                FeatureVector pred_f = global_features(space, instance.sentence, predicted, emb);
                // Two-pointer walk over the sorted supports.
                std::size_t a = 0, b = 0;
                auto apply = [&](int j, double delta) {
                    if (noise) delta *= multiplier[static_cast<std::size_t>(j)];
                    if (delta != 0.0) weights.add(static_cast<std::size_t>(j), delta);
                };
                if (noise) {
                    for (std::size_t i = 0; i < g.indices.size(); ++i) {
                        multiplier[static_cast<std::size_t>(g.indices[i])] = g.values[i];
                    }
                }
                while (a < gold_f.items.size() || b < pred_f.items.size()) {
                    if (b == pred_f.items.size() ||
                        (a < gold_f.items.size() && gold_f.items[a].first < pred_f.items[b].first)) {
                        apply(gold_f.items[a].first, gold_f.items[a].second);
                        ++a;
                    } else if (a == gold_f.items.size() ||
                               pred_f.items[b].first < gold_f.items[a].first) {
                        apply(pred_f.items[b].first, -pred_f.items[b].second);
                        ++b;
                    } else {
                        apply(gold_f.items[a].first,
                              gold_f.items[a].second - pred_f.items[b].second);
                        ++a;
                        ++b;
                    }
                }
                if (noise) {
                    for (int j : g.indices) multiplier[static_cast<std::size_t>(j)] = 1.0;
                }
            }

            weights.decay(factor);
            weights.end_step();
        }
        if (stats) {
            stats->epoch_mistakes.push_back(mistakes);
            stats->total_updates += mistakes;
        }
    }

    FeatureModel out(space, weights.average());
    out.check_finite();
    return out;
}

}  // namespace

CorruptionVector sample_corruption(const GaussianPrior& prior, std::vector<int> active,
                                   std::mt19937_64& rng) {
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());

    CorruptionVector g;
    g.indices = std::move(active);
    g.values.resize(g.indices.size());
    const bool single = prior.needs_resolution();
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < g.indices.size(); ++i) {
        // The unit draw is consumed unconditionally so the stream does not
        // depend on which sigmas happen to be zero.
        double z = unit(rng);
        double sigma = single ? 0.0 : std::sqrt(prior.variances[static_cast<std::size_t>(g.indices[i])]);
        g.values[i] = 1.0 + sigma * z;
    }
    return g;
}

std::vector<int> active_features(const FeatureSpace& space, const Sentence& sentence,
                                 const EmbeddingTable& emb) {
    std::vector<char> mark(static_cast<std::size_t>(space.size()), 0);
    const int num_tags = space.num_tags();
    const int dims = space.embedding_dims();
    for (const std::string& token : sentence.tokens) {
        OrthoFlags flags = ortho_flags(token);
        const double* vec = emb.find(token);
        for (int tag = 0; tag < num_tags; ++tag) {
            if (flags.has_capital) mark[static_cast<std::size_t>(space.ortho(tag, 0))] = 1;
            if (flags.has_hyphen) mark[static_cast<std::size_t>(space.ortho(tag, 1))] = 1;
            if (flags.has_digit) mark[static_cast<std::size_t>(space.ortho(tag, 2))] = 1;
            if (vec) {
                for (int d = 0; d < dims; ++d) {
                    mark[static_cast<std::size_t>(space.embedding(tag, d))] = 1;
                }
            }
        }
    }
    if (sentence.tokens.size() >= 2) {
        for (int cur = 0; cur < num_tags; ++cur) {
            for (int prev = 0; prev < num_tags; ++prev) {
                mark[static_cast<std::size_t>(space.transition(cur, prev))] = 1;
            }
        }
    }
    std::vector<int> out;
    for (std::size_t j = 0; j < mark.size(); ++j) {
        if (mark[j]) out.push_back(static_cast<int>(j));
    }
    return out;
}

FeatureModel train_baseline(const TaggedCorpus& corpus, const EmbeddingTable& emb,
                            const PerceptronConfig& config, const FeatureModel* init,
                            PerceptronStats* stats) {
    FeatureSpace space(corpus.tagset(), emb.dims());
    std::vector<double> start(static_cast<std::size_t>(space.size()), 0.0);
    if (init) {
        if (init->space != space) {
            throw DataError("initial model does not match the corpus feature space");
        }
        start = init->weights;
    }
    return run_perceptron(corpus, emb, config, space, std::move(start), nullptr, config.decay,
                          stats);
}

FeatureModel train_noise(const TaggedCorpus& corpus, const EmbeddingTable& emb,
                         const GaussianPrior& prior, const PerceptronConfig& config,
                         PerceptronStats* stats) {
    FeatureSpace space(corpus.tagset(), emb.dims());
    if (prior.space != space) throw DataError("prior does not match the corpus feature space");
    return run_perceptron(corpus, emb, config, prior.space, prior.means, &prior, 0.0, stats);
}

}  // namespace crosstag
