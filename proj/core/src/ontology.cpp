#include "geoball/ontology.hpp"

#include "geoball/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <set>

namespace geoball {

namespace {

std::string_view trim(std::string_view s)
{
    const auto* ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

// Fixed-width bitset over concept ids, one row per concept.
class BitMatrix {
public:
    explicit BitMatrix(std::size_t n) : n_(n), words_((n + 63) / 64), bits_(n * words_, 0) {}

    void set(std::size_t row, std::size_t col) { bits_[row * words_ + col / 64] |= std::uint64_t{1} << (col % 64); }
    bool test(std::size_t row, std::size_t col) const
    {
        return (bits_[row * words_ + col / 64] >> (col % 64)) & 1U;
    }
    void merge_row(std::size_t dst, std::size_t src)
    {
        for (std::size_t w = 0; w < words_; ++w) bits_[dst * words_ + w] |= bits_[src * words_ + w];
    }

private:
    std::size_t n_;
    std::size_t words_;
    std::vector<std::uint64_t> bits_;
};

// Returns one witness cycle per back edge found during DFS over told parents.
std::vector<std::vector<ConceptId>> find_cycles(const Ontology& o)
{
    enum Color : char { White, Grey, Black };
    std::vector<Color> color(o.size(), White);
    std::vector<std::vector<ConceptId>> cycles;
    std::set<std::vector<ConceptId>> seen;

    struct Frame {
        ConceptId node;
        std::size_t next;
    };
    for (ConceptId start = 0; start < o.size(); ++start) {
        if (color[start] != White) continue;
        std::vector<Frame> stack{{start, 0}};
        color[start] = Grey;
        while (!stack.empty()) {
            auto& top = stack.back();
            const auto& parents = o.told_parents(top.node);
            if (top.next == parents.size()) {
                color[top.node] = Black;
                stack.pop_back();
                continue;
            }
            const ConceptId p = parents[top.next++];
            if (color[p] == White) {
                color[p] = Grey;
                stack.push_back({p, 0});
            } else if (color[p] == Grey) {
                auto it = std::find_if(stack.begin(), stack.end(), [p](const Frame& f) { return f.node == p; });
                std::vector<ConceptId> cycle;
                for (; it != stack.end(); ++it) cycle.push_back(it->node);
                auto key = cycle;
                std::sort(key.begin(), key.end());
                if (seen.insert(key).second) cycles.push_back(std::move(cycle));
            }
        }
    }
    return cycles;
}

// Reflexive-transitive reachability over told parents; tolerates cycles.
BitMatrix told_reachability(const Ontology& o)
{
    BitMatrix reach(o.size());
    std::vector<ConceptId> queue;
    for (ConceptId c = 0; c < o.size(); ++c) {
        reach.set(c, c);
        queue.assign(1, c);
        while (!queue.empty()) {
            const ConceptId cur = queue.back();
            queue.pop_back();
            for (ConceptId p : o.told_parents(cur)) {
                if (!reach.test(c, p)) {
                    reach.set(c, p);
                    queue.push_back(p);
                }
            }
        }
    }
    return reach;
}

// Concepts ordered so that every told parent precedes its children; empty if cyclic.
std::vector<ConceptId> parents_first_order(const Ontology& o)
{
    std::vector<std::size_t> pending(o.size());
    std::vector<ConceptId> order;
    order.reserve(o.size());
    for (ConceptId c = 0; c < o.size(); ++c) {
        pending[c] = o.told_parents(c).size();
        if (pending[c] == 0) order.push_back(c);
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (ConceptId child : o.told_children(order[i])) {
            if (--pending[child] == 0) order.push_back(child);
        }
    }
    if (order.size() != o.size()) return {};
    return order;
}

[[noreturn]] void throw_cycle(const Ontology& o)
{
    const auto cycles = find_cycles(o);
    std::string msg = "subsumption cycle detected";
    if (!cycles.empty()) {
        msg += ": ";
        for (ConceptId c : cycles.front()) msg += o.name(c) + " ⊑ ";
        msg += o.name(cycles.front().front());
    }
    throw OntologyError(msg);
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte)
{
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

// ---------------------------------------------------------------------------
// Builder

ConceptId Ontology::Builder::intern(std::string_view raw)
{
    const auto name = trim(raw);
    if (name.empty()) throw OntologyError("empty concept identifier");
    const std::string key(name);
    if (auto it = index_.find(key); it != index_.end()) return it->second;
    const auto id = static_cast<ConceptId>(names_.size());
    names_.push_back(key);
    index_.emplace(key, id);
    return id;
}

ConceptId Ontology::Builder::add_concept(std::string_view raw)
{
    if (find(raw)) throw OntologyError("duplicate concept identifier '" + std::string(trim(raw)) + "'");
    return intern(raw);
}

std::optional<ConceptId> Ontology::Builder::find(std::string_view name) const
{
    if (auto it = index_.find(std::string(trim(name))); it != index_.end()) return it->second;
    return std::nullopt;
}

bool Ontology::Builder::add_subclass(ConceptId child, ConceptId parent)
{
    const Subsumption s{child, parent};
    if (!subclass_seen_.insert(s).second) return false;
    subclass_.push_back(s);
    return true;
}

bool Ontology::Builder::add_disjoint(ConceptId a, ConceptId b)
{
    const auto d = DisjointPair::make(a, b);
    if (!disjoint_seen_.insert(d).second) return false;
    disjoint_.push_back(d);
    return true;
}

void Ontology::Builder::mark_leaf(ConceptId c)
{
    leaves_declared_ = true;
    if (std::find(leaves_.begin(), leaves_.end(), c) == leaves_.end()) leaves_.push_back(c);
}

Ontology Ontology::Builder::build() &&
{
    Ontology o;
    o.names_ = std::move(names_);
    o.index_ = std::move(index_);
    o.subclass_ = std::move(subclass_);
    o.disjoint_ = std::move(disjoint_);
    const auto n = o.names_.size();
    o.parents_.assign(n, {});
    o.children_.assign(n, {});
    for (const auto& s : o.subclass_) {
        if (s.child >= n || s.parent >= n) throw OntologyError("subsumption references an unknown concept id");
        o.parents_[s.child].push_back(s.parent);
        o.children_[s.parent].push_back(s.child);
    }
    for (const auto& d : o.disjoint_) {
        if (d.second >= n) throw OntologyError("disjointness references an unknown concept id");
    }
    if (leaves_declared_) {
        o.leaves_ = std::move(leaves_);
    } else {
        for (ConceptId c = 0; c < n; ++c) {
            if (o.children_[c].empty()) o.leaves_.push_back(c);
        }
    }
    o.is_leaf_.assign(n, 0);
    for (ConceptId c : o.leaves_) {
        if (c >= n) throw OntologyError("leaf references an unknown concept id");
        o.is_leaf_[c] = 1;
    }
    return o;
}

std::optional<ConceptId> Ontology::find(std::string_view name) const
{
    if (auto it = index_.find(std::string(trim(name))); it != index_.end()) return it->second;
    return std::nullopt;
}

ConceptId Ontology::id(std::string_view name) const
{
    if (auto c = find(name)) return *c;
    throw OntologyError("unknown concept '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Validation

std::string_view to_string(Diagnostic::Kind kind)
{
    switch (kind) {
    case Diagnostic::Kind::Cycle: return "cycle";
    case Diagnostic::Kind::DisjointSubsumed: return "disjoint-subsumed";
    case Diagnostic::Kind::Unsatisfiable: return "unsatisfiable";
    case Diagnostic::Kind::LeafHasChildren: return "leaf-has-children";
    }
    return "unknown";
}

std::vector<Diagnostic> validate(const Ontology& o)
{
    std::vector<Diagnostic> out;

    for (const auto& cycle : find_cycles(o)) {
        Diagnostic d{Diagnostic::Kind::Cycle, "subsumption cycle: ", {}};
        for (ConceptId c : cycle) {
            d.concepts.push_back(o.name(c));
            d.message += o.name(c) + " ⊑ ";
        }
        d.message += o.name(cycle.front());
        out.push_back(std::move(d));
    }

    const auto reach = told_reachability(o);
    for (const auto& dp : o.disjoint_axioms()) {
        const bool related = dp.first == dp.second || reach.test(dp.first, dp.second) || reach.test(dp.second, dp.first);
        if (related) {
            out.push_back({Diagnostic::Kind::DisjointSubsumed,
                           "disjoint concepts " + o.name(dp.first) + " and " + o.name(dp.second) +
                               " are related by subsumption",
                           {o.name(dp.first), o.name(dp.second)}});
        }
    }

    for (ConceptId c = 0; c < o.size(); ++c) {
        for (const auto& dp : o.disjoint_axioms()) {
            if (reach.test(c, dp.first) && reach.test(c, dp.second)) {
                out.push_back({Diagnostic::Kind::Unsatisfiable,
                               "concept " + o.name(c) + " is unsatisfiable: subsumed by disjoint " +
                                   o.name(dp.first) + " and " + o.name(dp.second),
                               {o.name(c), o.name(dp.first), o.name(dp.second)}});
                break;
            }
        }
    }

    for (ConceptId leaf : o.leaves()) {
        if (!o.told_children(leaf).empty()) {
            out.push_back({Diagnostic::Kind::LeafHasChildren,
                           "leaf " + o.name(leaf) + " has told subclasses",
                           {o.name(leaf)}});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON document

Ontology parse_ontology(std::string_view document, std::vector<std::string>* warnings)
{
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(document, e.byte);
        std::string what = e.what();
        if (auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
        throw ParseError(what, line, col);
    }
    if (!doc.is_object()) throw ParseError("ontology document must be a JSON object");

    auto warn = [&](std::string msg) {
        if (warnings) warnings->push_back(std::move(msg));
    };
    auto string_array = [](const json& v, const char* key) {
        if (!v.is_array()) throw ParseError(std::string("'") + key + "' must be an array");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) throw ParseError(std::string("'") + key + "' entries must be strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    };
    auto pair_array = [](const json& v, const char* key) {
        if (!v.is_array()) throw ParseError(std::string("'") + key + "' must be an array");
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& e : v) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
                throw ParseError(std::string("'") + key + "' entries must be two-element string arrays");
            }
            out.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
        }
        return out;
    };

    if (!doc.contains("concepts")) throw ParseError("missing 'concepts'");

    Ontology::Builder b;
    for (const auto& name : string_array(doc["concepts"], "concepts")) b.add_concept(name);

    auto lookup = [&](const std::string& name, const char* where) {
        if (auto id = b.find(name)) return *id;
        throw OntologyError("unknown identifier '" + name + "' in " + where);
    };

    if (doc.contains("subclass")) {
        for (const auto& [child, parent] : pair_array(doc["subclass"], "subclass")) {
            if (!b.add_subclass(lookup(child, "subclass"), lookup(parent, "subclass"))) {
                warn("duplicate subclass axiom " + child + " ⊑ " + parent + " ignored");
            }
        }
    }
    if (doc.contains("disjoint")) {
        for (const auto& [a, c] : pair_array(doc["disjoint"], "disjoint")) {
            if (!b.add_disjoint(lookup(a, "disjoint"), lookup(c, "disjoint"))) {
                warn("duplicate disjointness axiom {" + a + ", " + c + "} ignored");
            }
        }
    }
    if (doc.contains("leaves")) {
        b.declare_leaves();
        for (const auto& name : string_array(doc["leaves"], "leaves")) b.mark_leaf(lookup(name, "leaves"));
    }

    auto ontology = std::move(b).build();
    if (const auto diags = validate(ontology); !diags.empty()) {
        std::string msg = "invalid ontology:";
        for (const auto& d : diags) msg += "\n  [" + std::string(to_string(d.kind)) + "] " + d.message;
        throw OntologyError(msg);
    }
    return ontology;
}

std::string to_json_text(const Ontology& o)
{
    nlohmann::ordered_json doc;
    doc["concepts"] = o.concepts();
    auto& sub = doc["subclass"] = nlohmann::ordered_json::array();
    for (const auto& s : o.subclass_axioms()) sub.push_back({o.name(s.child), o.name(s.parent)});
    auto& dis = doc["disjoint"] = nlohmann::ordered_json::array();
    for (const auto& d : o.disjoint_axioms()) dis.push_back({o.name(d.first), o.name(d.second)});
    auto& leaves = doc["leaves"] = nlohmann::ordered_json::array();
    for (ConceptId c : o.leaves()) leaves.push_back(o.name(c));
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Inferred class hierarchy

Ich::Ich(std::size_t num_concepts, std::vector<Subsumption> pairs) : n_(num_concepts), pairs_(std::move(pairs))
{
    std::sort(pairs_.begin(), pairs_.end());
    pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
    offsets_.assign(n_ + 1, 0);
    parents_flat_.reserve(pairs_.size());
    for (const auto& p : pairs_) {
        if (p.child >= n_ || p.parent >= n_) throw OntologyError("inferred pair references an unknown concept id");
        if (p.child == p.parent) throw OntologyError("inferred hierarchy must be irreflexive");
        ++offsets_[p.child + 1];
        parents_flat_.push_back(p.parent);
    }
    for (std::size_t i = 0; i < n_; ++i) offsets_[i + 1] += offsets_[i];

    depth_.assign(n_, 0);
    std::vector<char> on_stack(n_, 0);
    std::function<std::size_t(ConceptId)> visit = [&](ConceptId c) -> std::size_t {
        if (depth_[c] != 0) return depth_[c];
        if (on_stack[c]) throw OntologyError("inferred hierarchy contains a cycle");
        on_stack[c] = 1;
        std::size_t d = 1;
        for (ConceptId a : ancestors(c)) d = std::max(d, visit(a) + 1);
        on_stack[c] = 0;
        return depth_[c] = d;
    };
    for (ConceptId c = 0; c < n_; ++c) visit(c);
}

bool Ich::contains(ConceptId child, ConceptId parent) const
{
    const auto anc = ancestors(child);
    return std::binary_search(anc.begin(), anc.end(), parent);
}

std::span<const ConceptId> Ich::ancestors(ConceptId c) const
{
    if (c >= n_) throw std::out_of_range("concept id out of range");
    return {parents_flat_.data() + offsets_[c], offsets_[c + 1] - offsets_[c]};
}

std::vector<ConceptId> Ich::direct_parents(ConceptId c) const
{
    const auto anc = ancestors(c);
    std::vector<ConceptId> out;
    for (ConceptId q : anc) {
        const bool implied = std::any_of(anc.begin(), anc.end(), [&](ConceptId r) { return r != q && contains(r, q); });
        if (!implied) out.push_back(q);
    }
    return out;
}

std::size_t Ich::depth(ConceptId c) const { return depth_.at(c); }

Ich compute_ich(const Ontology& o)
{
    const auto order = parents_first_order(o);
    if (order.size() != o.size()) throw_cycle(o);

    BitMatrix anc(o.size());
    for (ConceptId c : order) {
        for (ConceptId p : o.told_parents(c)) {
            anc.set(c, p);
            anc.merge_row(c, p);
        }
    }
    std::vector<Subsumption> pairs;
    for (ConceptId c = 0; c < o.size(); ++c) {
        for (ConceptId q = 0; q < o.size(); ++q) {
            if (q != c && anc.test(c, q)) pairs.push_back({c, q});
        }
    }
    return Ich(o.size(), std::move(pairs));
}

HierarchyStats compute_stats(const Ontology& o, const Ich& ich, OccurrenceCount mode)
{
    const auto order = parents_first_order(o);
    if (order.size() != o.size()) throw_cycle(o);

    HierarchyStats stats;
    stats.level.assign(o.size(), 1);
    for (ConceptId c : order) {
        for (ConceptId p : o.told_parents(c)) stats.level[c] = std::max(stats.level[c], stats.level[p] + 1);
    }
    stats.total_levels = o.size() == 0 ? 0 : *std::max_element(stats.level.begin(), stats.level.end());

    stats.occurrences.assign(o.size(), 0);
    if (mode == OccurrenceCount::InferredAndDisjoint) {
        for (const auto& p : ich.pairs()) {
            ++stats.occurrences[p.child];
            ++stats.occurrences[p.parent];
        }
    } else {
        for (const auto& s : o.subclass_axioms()) {
            ++stats.occurrences[s.child];
            ++stats.occurrences[s.parent];
        }
    }
    for (const auto& d : o.disjoint_axioms()) {
        ++stats.occurrences[d.first];
        if (d.second != d.first) ++stats.occurrences[d.second];
    }
    return stats;
}

// ---------------------------------------------------------------------------
// Synthetic hierarchy

Ontology make_balanced_ontology(std::span<const std::size_t> branching, SiblingDisjointness disjointness)
{
    Ontology::Builder b;
    std::vector<std::pair<ConceptId, std::string>> frontier{{b.add_concept("root"), "root"}};
    for (std::size_t depth = 0; depth < branching.size(); ++depth) {
        const bool last = depth + 1 == branching.size();
        const bool disjoint = disjointness == SiblingDisjointness::AllLevels ||
                              (disjointness == SiblingDisjointness::Leaves && last);
        std::vector<std::pair<ConceptId, std::string>> next;
        for (const auto& [parent, path] : frontier) {
            const std::size_t first = next.size();
            for (std::size_t k = 0; k < branching[depth]; ++k) {
                auto name = path + "." + std::to_string(k);
                const ConceptId child = b.add_concept(name);
                b.add_subclass(child, parent);
                next.emplace_back(child, std::move(name));
            }
            if (!disjoint) continue;
            for (std::size_t i = first; i < next.size(); ++i) {
                for (std::size_t j = i + 1; j < next.size(); ++j) b.add_disjoint(next[i].first, next[j].first);
            }
        }
        frontier = std::move(next);
    }
    b.declare_leaves();
    for (const auto& leaf : frontier) b.mark_leaf(leaf.first);
    return std::move(b).build();
}

}  // namespace geoball
