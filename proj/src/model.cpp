#include "crosstag/model.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace crosstag {

FeatureModel::FeatureModel(FeatureSpace s, std::vector<double> w)
    : space(std::move(s)), weights(std::move(w)) {
    if (weights.size() != static_cast<std::size_t>(space.size())) {
        throw DataError("weight vector size does not match feature space");
    }
}

void FeatureModel::check_finite() const {
    for (double w : weights) {
        if (!std::isfinite(w)) throw NumericError("model contains a non-finite weight");
    }
}

ModelFile::ModelFile(FeatureModel m)
    : model(std::move(m)), present(model.weights.size(), 1) {}

namespace {

constexpr const char* kModelMagic = "crosstag-model 1";

void write_space_header(std::ofstream& out, const FeatureSpace& space) {
    out << "tags\t";
    for (int t = 0; t < space.num_tags(); ++t) {
        if (t) out << ' ';
        out << space.tagset().name(t);
    }
    out << '\n';
    out << "ortho\t";
    for (int f = 0; f < kOrthoFlagCount; ++f) {
        if (f) out << ' ';
        out << kOrthoFlagNames[f];
    }
    out << '\n';
    out << "embdim\t" << space.embedding_dims() << '\n';
}

struct HeaderReader {
    std::ifstream in;
    std::string path;
    std::size_t lineno = 0;
    std::optional<std::string> pushed_back;

    std::string where() const { return path + ":" + std::to_string(lineno); }

    bool next(std::string& line) {
        if (pushed_back) {
            line = std::move(*pushed_back);
            pushed_back.reset();
            return true;
        }
        if (!std::getline(in, line)) return false;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++lineno;
        return true;
    }

    // Returns the value of a "name<TAB>value" line, enforcing the name.
    std::string expect(const std::string& name) {
        std::string line;
        if (!next(line)) throw DataError(path + ": truncated header, expected '" + name + "'");
        auto fields = split(line, '\t');
        if (fields.size() != 2 || fields[0] != name) {
            throw DataError(where() + ": expected '" + name + "<TAB>...' line");
        }
        return std::string(fields[1]);
    }
};

HeaderReader open_with_magic(const std::string& path, const char* magic) {
    HeaderReader r;
    r.in.open(path);
    r.path = path;
    if (!r.in) throw DataError("cannot open '" + path + "'");
    std::string line;
    if (!r.next(line) || line != magic) {
        throw DataError(path + ": not a " + std::string(magic) + " file");
    }
    return r;
}

FeatureSpace read_space_header(HeaderReader& r) {
    std::string tags_field = r.expect("tags");
    std::vector<std::string> names;
    for (auto name : split_ws(tags_field)) names.emplace_back(name);
    Tagset tagset(names);

    std::string ortho_field = r.expect("ortho");
    auto flags = split_ws(ortho_field);
    if (flags.size() != kOrthoFlagCount) throw DataError(r.where() + ": unexpected ortho flag list");
    for (int f = 0; f < kOrthoFlagCount; ++f) {
        if (flags[f] != kOrthoFlagNames[f]) {
            throw DataError(r.where() + ": unexpected ortho flag '" + std::string(flags[f]) + "'");
        }
    }

    long embdim = parse_long(r.expect("embdim"), r.where());
    if (embdim < 0) throw DataError(r.where() + ": negative embedding dimension");
    return FeatureSpace(std::move(tagset), static_cast<int>(embdim));
}

}  // namespace

void write_model(const FeatureModel& model, const std::string& path) {
    model.check_finite();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << kModelMagic << '\n';
    write_space_header(out, model.space);
    for (int j = 0; j < model.space.size(); ++j) {
        if (model.weights[j] == 0.0) continue;
        out << model.space.key(j) << '\t' << fmt_double(model.weights[j]) << '\n';
    }
}

ModelFile read_model(const std::string& path) {
    HeaderReader r = open_with_magic(path, kModelMagic);
    FeatureSpace space = read_space_header(r);
    ModelFile file{FeatureModel(std::move(space))};
    std::fill(file.present.begin(), file.present.end(), 0);

    std::string line;
    while (r.next(line)) {
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 2) throw DataError(r.where() + ": expected 'key<TAB>weight'");
        int index = file.model.space.index_of_key(fields[0], r.where());
        if (file.present[index]) throw DataError(r.where() + ": duplicate feature key");
        file.model.weights[index] = parse_double(fields[1], r.where());
        file.present[index] = 1;
    }
    file.model.check_finite();
    return file;
}

ModelFile read_model(const std::string& path, const FeatureSpace& expected) {
    ModelFile file = read_model(path);
    if (file.model.space != expected) {
        throw DataError(path + ": feature space does not match (tagset or embedding dimension differ)");
    }
    return file;
}

}  // namespace crosstag
