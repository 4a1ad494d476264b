#ifndef RETROTAB_TABLESPACE_HPP
#define RETROTAB_TABLESPACE_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "retrotab/program.hpp"
#include "retrotab/term.hpp"
#include "retrotab/trie.hpp"

namespace retrotab {

enum class FrameState : uint8_t { Generator, Consumer, Loader, Complete };
const char* frame_state_name(FrameState s);

// What a frame's answer trie rows mean, fixed at frame creation:
// substitutions for the frame's own call variables, substitutions for
// its general's call variables, or complete argument tuples shared by
// every subgoal of the predicate.
enum class AnswerStorage : uint8_t { OwnSubstitutions, GeneralSubstitutions, FullAnswers };

// Answers already in the shared trie that are older than the owning
// frame's timestamp but were never reported to that frame. A plain list
// until it outgrows the threshold, then mirrored into a hash set.
class PendingIndex {
public:
    explicit PendingIndex(uint32_t threshold = 8) : threshold_(threshold) {}

    bool contains(AnswerLeaf l) const;
    void insert(AnswerLeaf l);
    bool erase(AnswerLeaf l);
    size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    bool hashed() const { return set_ != nullptr; }
    std::vector<AnswerLeaf> drain_sorted_by_ts();

private:
    uint32_t threshold_;
    std::vector<AnswerLeaf> items_;
    std::unique_ptr<std::unordered_set<AnswerLeaf>> set_;
};

struct TableEntry;

struct SubgoalFrame {
    uint32_t id = 0;  // global creation order
    TableEntry* entry = nullptr;
    TermTuple call;  // canonical argument tuple
    FrameState state = FrameState::Generator;
    bool born_generator = true;
    bool converted = false;
    AnswerStorage storage = AnswerStorage::OwnSubstitutions;

    // Timestamp of the last generated or consumed answer.
    uint64_t ts = 0;
    std::vector<AnswerLeaf> arl;
    size_t arl_cursor = 0;  // frame-level consumption cursor
    // arl prefix length at the moment of generator-to-consumer conversion;
    // everything before it was produced (and delivered) as a generator.
    size_t arl_at_conversion = 0;
    PendingIndex pending;
    TermTuple tmpl;  // answer template
    SubgoalFrame* general = nullptr;
    std::unique_ptr<Trie> own_trie;  // variant/subsumptive generators

    explicit SubgoalFrame(uint32_t pending_threshold) : pending(pending_threshold) {}
};

struct TableEntry {
    uint32_t id = 0;
    uint32_t pred_sym = 0;
    uint32_t arity = 0;
    EvalMode mode = EvalMode::Variant;
    bool synthetic = false;  // engine-internal (query wrappers); hidden from stats

    Trie subgoal_trie;
    std::unique_ptr<Trie> shared_trie;  // one answer trie for every subgoal (retroactive mode)
    std::vector<std::unique_ptr<SubgoalFrame>> frames;
    std::unordered_map<TupleKey, SubgoalFrame*, TupleKeyHash> by_call;
    std::unordered_map<const TrieNode*, SubgoalFrame*> frame_of_leaf;

    TableEntry(uint32_t arity_, uint32_t hash_threshold)
        : arity(arity_), subgoal_trie(arity_, hash_threshold) {}
};

struct CallOutcome {
    enum class Kind : uint8_t { NewGenerator, VariantFound, SubsumingFound };
    Kind kind;
    SubgoalFrame* frame;  // the new generator, the variant frame, or the general
    // Existing non-complete frames subsumed by the new call (retroactive
    // mode, new-generator outcomes only), in subgoal-trie preorder.
    std::vector<SubgoalFrame*> subsumed;
};

struct TableSpaceOptions {
    uint32_t pending_threshold = 8;
    uint32_t trie_hash_threshold = 8;
};

class TableSpace {
public:
    TableSpace(std::shared_ptr<SymbolTable> syms, TableSpaceOptions opts = {});

    TableEntry& declare(uint32_t pred_sym, uint32_t arity, EvalMode mode,
                        bool synthetic = false);
    TableEntry* find(uint32_t pred_sym, uint32_t arity);
    const TableEntry* find(uint32_t pred_sym, uint32_t arity) const;

    // Variant lookup first; in subsumption modes, otherwise the most
    // specific subsuming frame (first in subgoal-trie preorder among
    // incomparable candidates); otherwise a fresh generator frame is
    // created and registered. Retroactive new generators also report the
    // running frames the call subsumes.
    CallOutcome subgoal_call_lookup(TableEntry& e, const TermTuple& call);

    SubgoalFrame& create_consumer_frame(TableEntry& e, const TermTuple& call,
                                        SubgoalFrame& general);

    // Answer insertion for each table organization. All three return the
    // leaf when the answer is new *for the frame* and nullopt when the
    // new-answer operation must fail as repeated; a returned leaf has
    // been appended to the frame's answer return list.
    std::optional<AnswerLeaf> retroactive_insert_answer(std::span<const TermPtr> answer,
                                                 SubgoalFrame& fr);
    std::optional<AnswerLeaf> subsumptive_insert_answer(std::span<const TermPtr> subst_values,
                                                SubgoalFrame& fr);
    std::optional<AnswerLeaf> variant_insert_answer(std::span<const TermPtr> subst_values,
                                                    SubgoalFrame& fr);
    std::optional<AnswerLeaf> insert_answer(std::span<const TermPtr> answer_instance,
                                            SubgoalFrame& fr);

    // Pull newly matching answers from the frame's source trie into its
    // answer return list (consumer/loader frames). Returns how many were
    // appended.
    size_t extend_arl(SubgoalFrame& fr);

    // Frame-cursor consumption: extend, then hand out everything not yet
    // consumed through this interface.
    std::vector<AnswerLeaf> fetch_new_answers(SubgoalFrame& fr);

    // Pending answers move to the answer return list as unconsumed; the
    // frame keeps its timestamp so later fetches see only answers it did
    // not produce. Returns false for frames that are already consumers
    // or loaders; throws on completed frames.
    bool convert_generator_to_consumer(SubgoalFrame& fr, SubgoalFrame& general);

    TermTuple build_answer_template(EvalMode mode, const TermTuple& call,
                                    const SubgoalFrame* general) const;

    // Reconstruct the full argument tuple a leaf stands for, from the
    // frame's point of view.
    TermTuple answer_terms(const SubgoalFrame& fr, AnswerLeaf leaf) const;

    Trie* answer_source(SubgoalFrame& fr) const;

    std::vector<SubgoalFrame*> frames_in_preorder(TableEntry& e) const;

    const std::vector<std::unique_ptr<TableEntry>>& entries() const { return entries_; }
    uint32_t frame_count() const { return next_frame_id_; }
    const TableSpaceOptions& options() const { return opts_; }
    const SymbolTable& symbols() const { return *syms_; }

    // Counts for measurements; synthetic entries are skipped.
    size_t answer_trie_nodes() const;
    size_t subgoal_trie_nodes() const;

    void dump(std::ostream& os) const;

private:
    SubgoalFrame& new_frame(TableEntry& e, const TermTuple& call);

    std::shared_ptr<SymbolTable> syms_;
    TableSpaceOptions opts_;
    std::vector<std::unique_ptr<TableEntry>> entries_;
    std::unordered_map<uint64_t, TableEntry*> by_pred_;
    uint32_t next_frame_id_ = 0;
};

}  // namespace retrotab

#endif
