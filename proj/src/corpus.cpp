#include "crosstag/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace crosstag {

Tagset::Tagset(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw DataError("tagset must contain at least one tag");
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i].empty()) throw DataError("tagset contains an empty tag name");
        auto [it, inserted] = index_.emplace(names_[i], static_cast<int>(i));
        if (!inserted) throw DataError("duplicate tag name '" + names_[i] + "'");
    }
}

const Tagset& Tagset::universal() {
    static const Tagset tagset({"ADJ", "ADP", "ADV", "CONJ", "DET", "NOUN",
                                "NUM", "PRON", "PRT", "PUNCT", "VERB", "X"});
    return tagset;
}

int Tagset::index(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? -1 : it->second;
}

int Tagset::index_or_throw(std::string_view name, const std::string& context) const {
    int idx = index(name);
    if (idx < 0) throw DataError(context + ": unknown tag '" + std::string(name) + "'");
    return idx;
}

TaggedCorpus::TaggedCorpus(Tagset tagset, std::vector<TaggedSentence> sentences)
    : tagset_(std::move(tagset)) {
    for (auto& s : sentences) add(std::move(s));
}

void TaggedCorpus::check(const TaggedSentence& sentence) const {
    if (sentence.sentence.tokens.empty()) throw DataError("empty sentence");
    if (sentence.tags.size() != sentence.sentence.tokens.size()) {
        throw DataError("tag sequence length does not match token count");
    }
    for (const auto& token : sentence.sentence.tokens) {
        if (token.empty()) throw DataError("empty token string");
    }
    for (int tag : sentence.tags) {
        if (tag < 0 || tag >= tagset_.size()) throw DataError("tag index out of range");
    }
}

void TaggedCorpus::add(TaggedSentence sentence) {
    check(sentence);
    sentences_.push_back(std::move(sentence));
}

std::size_t TaggedCorpus::token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences_) n += s.sentence.size();
    return n;
}

void ProjectionTable::add(VotedSentence sentence) {
    if (sentence.sentence.tokens.empty()) throw DataError("empty sentence in vote table");
    if (sentence.tokens.size() != sentence.sentence.tokens.size()) {
        throw DataError("vote table does not cover every token");
    }
    for (const auto& tv : sentence.tokens) {
        for (const auto& [lang, tag] : tv.votes) {
            if (tag < 0 || tag >= tagset_.size()) throw DataError("vote tag index out of range");
        }
    }
    sentences_.push_back(std::move(sentence));
}

namespace {

// Reads lines, strips a trailing '\r', reports 1-based line numbers.
class LineReader {
public:
    LineReader(const std::string& path, std::ifstream& in) : path_(path), in_(in) {}

    bool next(std::string& line) {
        if (!std::getline(in_, line)) return false;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++lineno_;
        return true;
    }

    std::string where() const {
        return path_ + ":" + std::to_string(lineno_);
    }

private:
    const std::string& path_;
    std::ifstream& in_;
    std::size_t lineno_ = 0;
};

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return in;
}

std::ofstream create_or_throw(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    return out;
}

}  // namespace

TaggedCorpus read_corpus(const std::string& path, const Tagset& tagset) {
    std::ifstream in = open_or_throw(path);
    LineReader reader(path, in);

    TaggedCorpus corpus(tagset);
    TaggedSentence current;
    std::string line;
    while (reader.next(line)) {
        if (line.empty()) {
            if (!current.tags.empty()) {
                corpus.add(std::move(current));
                current = TaggedSentence{};
            }
            continue;
        }
        auto fields = split(line, '\t');
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw DataError(reader.where() + ": expected 'token<TAB>tag', got '" + line + "'");
        }
        current.sentence.tokens.emplace_back(fields[0]);
        current.tags.push_back(tagset.index_or_throw(fields[1], reader.where()));
    }
    if (!current.tags.empty()) corpus.add(std::move(current));
    if (corpus.empty()) throw DataError(path + ": no sentences");
    return corpus;
}

void write_corpus(const TaggedCorpus& corpus, const std::string& path) {
    std::ofstream out = create_or_throw(path);
    for (const auto& s : corpus.sentences()) {
        for (std::size_t t = 0; t < s.sentence.size(); ++t) {
            out << s.sentence.tokens[t] << '\t' << corpus.tagset().name(s.tags[t]) << '\n';
        }
        out << '\n';
    }
}

ProjectionTable read_votes(const std::string& path, const Tagset& tagset) {
    std::ifstream in = open_or_throw(path);
    LineReader reader(path, in);

    ProjectionTable table(tagset);
    VotedSentence current;
    std::string line;
    while (reader.next(line)) {
        if (line.empty()) {
            if (!current.tokens.empty()) {
                table.add(std::move(current));
                current = VotedSentence{};
            }
            continue;
        }
        auto fields = split(line, '\t');
        if (fields.empty() || fields.size() > 2 || fields[0].empty()) {
            throw DataError(reader.where() + ": expected 'token<TAB>votes', got '" + line + "'");
        }
        TokenVotes votes;
        if (fields.size() == 2 && !fields[1].empty()) {
            for (auto vote : split(fields[1], ',')) {
                auto colon = vote.find(':');
                if (colon == std::string_view::npos || colon == 0 || colon + 1 == vote.size()) {
                    throw DataError(reader.where() + ": bad vote '" + std::string(vote) + "'");
                }
                std::string lang(vote.substr(0, colon));
                int tag = tagset.index_or_throw(vote.substr(colon + 1), reader.where());
                votes.votes.emplace_back(std::move(lang), tag);
            }
        }
        current.sentence.tokens.emplace_back(fields[0]);
        current.tokens.push_back(std::move(votes));
    }
    if (!current.tokens.empty()) table.add(std::move(current));
    if (table.sentences().empty()) throw DataError(path + ": no sentences");
    return table;
}

void write_votes(const ProjectionTable& table, const std::string& path) {
    std::ofstream out = create_or_throw(path);
    for (const auto& s : table.sentences()) {
        for (std::size_t t = 0; t < s.sentence.size(); ++t) {
            out << s.sentence.tokens[t] << '\t';
            const auto& votes = s.tokens[t].votes;
            for (std::size_t v = 0; v < votes.size(); ++v) {
                if (v) out << ',';
                out << votes[v].first << ':' << table.tagset().name(votes[v].second);
            }
            out << '\n';
        }
        out << '\n';
    }
}

ProjectionTable merge_votes(const std::vector<ProjectionTable>& tables) {
    if (tables.empty()) throw DataError("no vote tables to merge");
    ProjectionTable merged = tables.front();
    for (std::size_t i = 1; i < tables.size(); ++i) {
        const auto& table = tables[i];
        if (table.tagset() != merged.tagset()) throw DataError("vote tables use different tagsets");
        if (table.sentences().size() != merged.sentences().size()) {
            throw DataError("vote tables have different sentence counts");
        }
        for (std::size_t s = 0; s < table.sentences().size(); ++s) {
            const auto& src = table.sentences()[s];
            auto& dst = merged.sentences()[s];
            if (src.sentence.tokens != dst.sentence.tokens) {
                throw DataError("vote tables disagree on tokens in sentence " + std::to_string(s + 1));
            }
            for (std::size_t t = 0; t < src.tokens.size(); ++t) {
                auto& votes = dst.tokens[t].votes;
                votes.insert(votes.end(), src.tokens[t].votes.begin(), src.tokens[t].votes.end());
            }
        }
    }
    return merged;
}

TaggedCorpus majority_vote(const ProjectionTable& table) {
    const Tagset& tagset = table.tagset();
    int fallback = tagset.index("X");
    if (fallback < 0) throw DataError("majority vote requires an X tag in the tagset");

    TaggedCorpus corpus(tagset);
    std::vector<int> counts(tagset.size());
    for (const auto& s : table.sentences()) {
        TaggedSentence tagged;
        tagged.sentence = s.sentence;
        tagged.tags.reserve(s.tokens.size());
        for (const auto& tv : s.tokens) {
            if (tv.votes.empty()) {
                tagged.tags.push_back(fallback);
                continue;
            }
            std::fill(counts.begin(), counts.end(), 0);
            for (const auto& [lang, tag] : tv.votes) ++counts[tag];
            int best = 0;
            for (int tag = 1; tag < tagset.size(); ++tag) {
                if (counts[tag] > counts[best]) best = tag;
            }
            tagged.tags.push_back(best);
        }
        corpus.add(std::move(tagged));
    }
    return corpus;
}

double token_accuracy(const TaggedCorpus& pred, const TaggedCorpus& gold) {
    if (pred.tagset() != gold.tagset()) throw DataError("accuracy: tagsets differ");
    if (pred.size() != gold.size()) throw DataError("accuracy: sentence counts differ");
    std::size_t total = 0;
    std::size_t matching = 0;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        const auto& p = pred.sentences()[s];
        const auto& g = gold.sentences()[s];
        if (p.sentence.tokens != g.sentence.tokens) {
            throw DataError("accuracy: token mismatch in sentence " + std::to_string(s + 1));
        }
        for (std::size_t t = 0; t < p.tags.size(); ++t) {
            ++total;
            if (p.tags[t] == g.tags[t]) ++matching;
        }
    }
    return static_cast<double>(matching) / static_cast<double>(total);
}

double macro_average(const std::vector<double>& per_language) {
    if (per_language.empty()) throw DataError("macro average of an empty list");
    double sum = 0.0;
    for (double a : per_language) sum += a;
    return sum / static_cast<double>(per_language.size());
}

}  // namespace crosstag
