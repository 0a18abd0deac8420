#include "geoball/error.hpp"
#include "geoball/ontology.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace geoball {

namespace {

std::string_view trim(std::string_view s)
{
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn)
{
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = text.substr(0, nl);
        fn(++line_no, line);
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
}

}  // namespace

std::vector<std::string> parse_label_list(std::string_view text)
{
    std::vector<std::string> labels;
    for_each_line(text, [&](std::size_t, std::string_view line) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') return;
        labels.emplace_back(t);
    });
    return labels;
}

Ontology ingest_hypernym_edges(std::string_view edges_tsv, std::span<const std::string> leaf_labels,
                               const IngestOptions& options)
{
    // child -> parents in file order
    std::unordered_map<std::string, std::vector<std::string>> parents;
    std::unordered_map<std::string, bool> known;
    for_each_line(edges_tsv, [&](std::size_t line_no, std::string_view raw) {
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') return;
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
            throw ParseError("expected exactly one tab between child and parent", line_no);
        }
        const std::string child(trim(line.substr(0, tab)));
        const std::string parent(trim(line.substr(tab + 1)));
        if (child.empty() || parent.empty()) throw ParseError("empty concept identifier", line_no);
        auto& ps = parents[child];
        if (std::find(ps.begin(), ps.end(), parent) == ps.end()) ps.push_back(parent);
        known[child] = true;
        known[parent] = true;
    });

    Ontology::Builder b;
    std::vector<ConceptId> leaf_ids;
    std::vector<std::string> leaf_names;
    for (const auto& raw : leaf_labels) {
        const std::string label(trim(raw));
        if (!known.count(label)) throw OntologyError("leaf label '" + label + "' does not appear in the edge list");
        const ConceptId leaf = b.intern(label);
        if (std::find(leaf_ids.begin(), leaf_ids.end(), leaf) == leaf_ids.end()) {
            leaf_ids.push_back(leaf);
            leaf_names.push_back(label);
        }

        // Breadth-first walk up the hypernym chains; already-interned ancestors
        // have had their edges added by an earlier leaf.
        std::vector<std::string> queue{label};
        std::map<std::string, bool> visited{{label, true}};
        for (std::size_t i = 0; i < queue.size(); ++i) {
            const auto it = parents.find(queue[i]);
            if (it == parents.end()) continue;
            const ConceptId child = b.intern(queue[i]);
            for (const auto& p : it->second) {
                b.add_subclass(child, b.intern(p));
                if (!visited[p]) {
                    visited[p] = true;
                    queue.push_back(p);
                }
            }
        }
    }

    b.declare_leaves();
    for (ConceptId leaf : leaf_ids) b.mark_leaf(leaf);

    if (options.sibling_disjoint) {
        // Group leaves by each of their direct parents.
        std::map<ConceptId, std::vector<ConceptId>> by_parent;
        for (std::size_t i = 0; i < leaf_ids.size(); ++i) {
            const auto it = parents.find(leaf_names[i]);
            if (it == parents.end()) continue;
            for (const auto& p : it->second) by_parent[*b.find(p)].push_back(leaf_ids[i]);
        }
        for (const auto& [parent, kids] : by_parent) {
            for (std::size_t i = 0; i < kids.size(); ++i) {
                for (std::size_t j = i + 1; j < kids.size(); ++j) b.add_disjoint(kids[i], kids[j]);
            }
        }
    }

    auto ontology = std::move(b).build();
    if (const auto diags = validate(ontology); !diags.empty()) {
        std::string msg = "invalid hypernym hierarchy:";
        for (const auto& d : diags) msg += "\n  [" + std::string(to_string(d.kind)) + "] " + d.message;
        throw OntologyError(msg);
    }
    return ontology;
}

}  // namespace geoball
