#ifndef CROSSTAG_LEARNERS_HPP
#define CROSSTAG_LEARNERS_HPP

#include <string_view>

#include "crosstag/diagnostics.hpp"
#include "crosstag/optimizer.hpp"
#include "crosstag/perceptron.hpp"

namespace crosstag {

// The five trainable systems.
enum class LearnerKind { CrfL2, CrfL2Prior, CrfEmpGauss, PercL2, PercNoise };

// Maps "crf-l2", "crf-l2prior", "crf-empgauss", "perc-l2", "perc-noise".
LearnerKind parse_learner(std::string_view id);
const char* learner_name(LearnerKind kind);
bool learner_needs_prior(LearnerKind kind);

struct LearnerOptions {
    LearnerKind kind = LearnerKind::CrfL2;
    double strength = 1.0;  // C, for the three CRF objectives
    OptimizerConfig optimizer;
    PerceptronConfig perceptron;
    const GaussianPrior* prior = nullptr;  // required when learner_needs_prior
    int threads = 1;
};

// Trains one model. `trace` (CRF kinds) and `stats` (perceptron kinds) are
// optional outputs.
FeatureModel train_learner(const LearnerOptions& options, const TaggedCorpus& corpus,
                           const EmbeddingTable& emb,
                           std::vector<IterationRecord>* trace = nullptr,
                           PerceptronStats* stats = nullptr);

// Wraps train_learner as a diagnostics Learner. The per-call seed replaces
// the perceptron seed (CRF training is seed-free). `emb` and any prior in
// `options` must outlive the returned closure.
Learner make_learner(const LearnerOptions& options, const EmbeddingTable& emb);

}  // namespace crosstag

#endif
