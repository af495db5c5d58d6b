#include "crosstag/learners.hpp"

#include <utility>

#include "crosstag/crf.hpp"

namespace crosstag {

LearnerKind parse_learner(std::string_view id) {
    if (id == "crf-l2") return LearnerKind::CrfL2;
    if (id == "crf-l2prior") return LearnerKind::CrfL2Prior;
    if (id == "crf-empgauss") return LearnerKind::CrfEmpGauss;
    if (id == "perc-l2") return LearnerKind::PercL2;
    if (id == "perc-noise") return LearnerKind::PercNoise;
    throw DataError("unknown learner '" + std::string(id) +
                    "' (expected crf-l2, crf-l2prior, crf-empgauss, perc-l2 or perc-noise)");
}

const char* learner_name(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::CrfL2: return "crf-l2";
        case LearnerKind::CrfL2Prior: return "crf-l2prior";
        case LearnerKind::CrfEmpGauss: return "crf-empgauss";
        case LearnerKind::PercL2: return "perc-l2";
        case LearnerKind::PercNoise: return "perc-noise";
    }
    return "?";
}

bool learner_needs_prior(LearnerKind kind) {
    return kind == LearnerKind::CrfL2Prior || kind == LearnerKind::CrfEmpGauss ||
           kind == LearnerKind::PercNoise;
}

FeatureModel train_learner(const LearnerOptions& options, const TaggedCorpus& corpus,
                           const EmbeddingTable& emb, std::vector<IterationRecord>* trace,
                           PerceptronStats* stats) {
    const FeatureSpace space(corpus.tagset(), emb.dims());
    if (learner_needs_prior(options.kind)) {
        if (!options.prior) {
            throw DataError(std::string(learner_name(options.kind)) + " requires a prior");
        }
        if (options.prior->space != space) {
            throw DataError("prior does not match the corpus feature space");
        }
    }
    if (options.kind != LearnerKind::PercL2 && options.kind != LearnerKind::PercNoise &&
        !(options.strength > 0.0)) {
        throw DataError("regularization strength must be positive");
    }

    switch (options.kind) {
        case LearnerKind::CrfL2:
        case LearnerKind::CrfL2Prior:
        case LearnerKind::CrfEmpGauss: {
            RegularizedObjective objective =
                options.kind == LearnerKind::CrfL2
                    ? RegularizedObjective::l2(space, options.strength)
                    : options.kind == LearnerKind::CrfL2Prior
                          ? RegularizedObjective::l2_prior(*options.prior, options.strength)
                          : RegularizedObjective::emp_gauss(*options.prior, options.strength);
            CrfTrainResult result =
                train_crf(objective, corpus, emb, options.optimizer, options.threads);
            if (trace) *trace = std::move(result.trace);
            return std::move(result.model);
        }
        case LearnerKind::PercL2:
            return train_baseline(corpus, emb, options.perceptron, nullptr, stats);
        case LearnerKind::PercNoise:
            return train_noise(corpus, emb, *options.prior, options.perceptron, stats);
    }
    throw DataError("unknown learner kind");
}

Learner make_learner(const LearnerOptions& options, const EmbeddingTable& emb) {
    return [options, &emb](const TaggedCorpus& corpus, std::uint64_t seed) -> Tagger {
        LearnerOptions run = options;
        run.perceptron.seed = seed;
        FeatureModel model = train_learner(run, corpus, emb);
        return [model = std::move(model), &emb](const Sentence& sentence) {
            return viterbi(sentence, model, emb);
        };
    };
}

}  // namespace crosstag
