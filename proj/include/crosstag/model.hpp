#ifndef CROSSTAG_MODEL_HPP
#define CROSSTAG_MODEL_HPP

#include <string>
#include <vector>

#include "crosstag/features.hpp"

namespace crosstag {

// Weight vector over a feature space. Entries must stay finite.
struct FeatureModel {
    FeatureSpace space;
    std::vector<double> weights;  // dense, size space.size()

    explicit FeatureModel(FeatureSpace s)
        : space(std::move(s)), weights(static_cast<std::size_t>(space.size()), 0.0) {}
    FeatureModel(FeatureSpace s, std::vector<double> w);

    void check_finite() const;
};

// A model as stored on disk: a sparse view of the feature space. Features
// without a line in the file carry weight 0 and count as unobserved when
// estimating priors.
struct ModelFile {
    FeatureModel model;
    std::vector<std::uint8_t> present;  // per feature

    explicit ModelFile(FeatureModel m);
};

// Header (tagset, ortho flag ids, embedding dimension), then one
// "feature-key<TAB>weight" line per nonzero feature in canonical order.
void write_model(const FeatureModel& model, const std::string& path);
ModelFile read_model(const std::string& path);
ModelFile read_model(const std::string& path, const FeatureSpace& expected);

}  // namespace crosstag

#endif
