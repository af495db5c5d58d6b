#ifndef CROSSTAG_PERCEPTRON_HPP
#define CROSSTAG_PERCEPTRON_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "crosstag/model.hpp"
#include "crosstag/priors.hpp"

namespace crosstag {

struct PerceptronConfig {
    int epochs = 5;
    // Per-update L2 weight decay for the baseline learner; the noise learner
    // has no hyper-parameters and ignores it.
    double decay = 1e-6;
    std::uint64_t seed = 42;
    // Visit instances in a seeded per-epoch shuffle instead of corpus order.
    bool shuffle = false;
};

struct PerceptronStats {
    // Instances decoded incorrectly (i.e. with a nonzero update), per epoch.
    std::vector<long long> epoch_mistakes;
    long long total_updates = 0;
};

// Multiplicative noise for one instance: one draw per active feature index,
// g_j ~ Normal(1, sigma_j). Inactive features implicitly keep multiplier 1.
struct CorruptionVector {
    std::vector<int> indices;    // sorted, unique
    std::vector<double> values;  // aligned with indices
};

// Draws the corruption vector for the given active features. sigma_j is the
// square root of the prior variance; a single-source prior carries no
// observed variance, so every sigma is zero and the multipliers are exactly
// 1. The active list is sorted and deduplicated internally, making the draw
// sequence independent of caller order.
CorruptionVector sample_corruption(const GaussianPrior& prior, std::vector<int> active,
                                   std::mt19937_64& rng);

// Every feature a sentence's lattice can touch: emission features of each
// token under every tag, plus (for length >= 2) all tag-pair transitions.
// Sorted ascending.
std::vector<int> active_features(const FeatureSpace& space, const Sentence& sentence,
                                 const EmbeddingTable& emb);

// Averaged structured perceptron with per-update L2 weight decay. Per
// instance: Viterbi-decode, add Phi(gold) - Phi(predicted), multiply the
// weights by (1 - decay), snapshot. Returns the mean of the snapshots.
// `init` seeds the starting weights (zero when null).
FeatureModel train_baseline(const TaggedCorpus& corpus, const EmbeddingTable& emb,
                            const PerceptronConfig& config, const FeatureModel* init = nullptr,
                            PerceptronStats* stats = nullptr);

// Averaged structured perceptron with empirical Gaussian noise injection.
// Weights start at the prior means; each instance draws one corruption
// vector g, decodes with weights scaled pairwise by g, and applies the
// update (Phi(gold) - Phi(predicted)) ⊙ g. No decay, no strength parameter.
FeatureModel train_noise(const TaggedCorpus& corpus, const EmbeddingTable& emb,
                         const GaussianPrior& prior, const PerceptronConfig& config,
                         PerceptronStats* stats = nullptr);

}  // namespace crosstag

#endif
