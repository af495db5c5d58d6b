#ifndef CROSSTAG_CORPUS_HPP
#define CROSSTAG_CORPUS_HPP

#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crosstag/common.hpp"

namespace crosstag {

// Ordered inventory of tag names. The order is canonical: it fixes tag
// indices, tie-breaking in majority votes and decoding, and the chance
// level 1/|tagset| used by the diagnostics.
class Tagset {
public:
    explicit Tagset(std::vector<std::string> names);

    // The 12-tag coarse universal tagset.
    static const Tagset& universal();

    int size() const { return static_cast<int>(names_.size()); }
    const std::string& name(int index) const { return names_[index]; }
    const std::vector<std::string>& names() const { return names_; }

    // -1 if the name is not in the tagset.
    int index(std::string_view name) const;
    int index_or_throw(std::string_view name, const std::string& context) const;

    bool operator==(const Tagset& other) const { return names_ == other.names_; }
    bool operator!=(const Tagset& other) const { return !(*this == other); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
};

struct Sentence {
    std::vector<std::string> tokens;  // length >= 1, no empty token

    std::size_t size() const { return tokens.size(); }
};

struct TaggedSentence {
    Sentence sentence;
    std::vector<int> tags;  // |tags| == |tokens|
};

class TaggedCorpus {
public:
    explicit TaggedCorpus(Tagset tagset) : tagset_(std::move(tagset)) {}
    TaggedCorpus(Tagset tagset, std::vector<TaggedSentence> sentences);

    const Tagset& tagset() const { return tagset_; }
    const std::vector<TaggedSentence>& sentences() const { return sentences_; }
    std::size_t size() const { return sentences_.size(); }
    bool empty() const { return sentences_.empty(); }

    void add(TaggedSentence sentence);
    std::size_t token_count() const;

private:
    void check(const TaggedSentence& sentence) const;

    Tagset tagset_;
    std::vector<TaggedSentence> sentences_;
};

// One vote is (source language id, tag index); a token may have no votes.
struct TokenVotes {
    std::vector<std::pair<std::string, int>> votes;
};

struct VotedSentence {
    Sentence sentence;
    std::vector<TokenVotes> tokens;  // one entry per token
};

class ProjectionTable {
public:
    explicit ProjectionTable(Tagset tagset) : tagset_(std::move(tagset)) {}

    const Tagset& tagset() const { return tagset_; }
    const std::vector<VotedSentence>& sentences() const { return sentences_; }
    std::vector<VotedSentence>& sentences() { return sentences_; }

    void add(VotedSentence sentence);

private:
    Tagset tagset_;
    std::vector<VotedSentence> sentences_;
};

// Two-column corpus files: one "token<TAB>tag" line per token, sentences
// separated by a blank line, UTF-8. Unknown tags are an error.
TaggedCorpus read_corpus(const std::string& path, const Tagset& tagset);
void write_corpus(const TaggedCorpus& corpus, const std::string& path);

// Vote files: one "token<TAB>lang:TAG,lang:TAG,..." line per token (the
// second field may be empty), sentences separated by a blank line.
ProjectionTable read_votes(const std::string& path, const Tagset& tagset);
void write_votes(const ProjectionTable& table, const std::string& path);

// Union of votes from several tables over the same token structure.
ProjectionTable merge_votes(const std::vector<ProjectionTable>& tables);

// Per-token majority vote. Ties go to the lowest canonical tag index;
// tokens with no votes fall back to the tagset's X tag.
TaggedCorpus majority_vote(const ProjectionTable& table);

// Fraction of tokens whose predicted tag matches gold.
double token_accuracy(const TaggedCorpus& pred, const TaggedCorpus& gold);

// Unweighted mean of per-language accuracies.
double macro_average(const std::vector<double>& per_language);

}  // namespace crosstag

#endif
