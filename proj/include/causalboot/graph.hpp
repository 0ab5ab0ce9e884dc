#pragma once

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "causalboot/common.hpp"
#include "causalboot/dataset.hpp"

namespace causalboot {

// Named roles read from a graph file; the CLI wires them into the bootstrap.
struct graph_roles {
    std::string target;                // intervention variable Y
    std::vector<std::string> effect;   // emitted feature columns X
    std::vector<std::string> adjust;   // back-door adjustment set S
    std::string mediator;              // front-door mediator Z
};

// DAG over named variables. Immutable after construction; safe to query from
// concurrent readers.
class causal_graph {
public:
    void add_vertex(variable_info v) {
        if (index_.count(v.name)) throw config_error("duplicate variable '" + v.name + "'");
        if (v.kind == var_kind::discrete && v.cardinality < 2)
            throw config_error("discrete variable '" + v.name + "' needs cardinality >= 2");
        if (v.kind == var_kind::continuous && v.dim < 1)
            throw config_error("continuous variable '" + v.name + "' needs dimension >= 1");
        index_[v.name] = verts_.size();
        verts_.push_back(std::move(v));
        parents_.emplace_back();
        children_.emplace_back();
    }

    void add_edge(const std::string& from, const std::string& to) {
        size_t a = idx(from), b = idx(to);
        if (a == b) throw config_error("self-loop on '" + from + "'");
        if (std::find(parents_[b].begin(), parents_[b].end(), a) != parents_[b].end())
            throw config_error("duplicate edge " + from + " -> " + to);
        parents_[b].push_back(a);
        children_[a].push_back(b);
    }

    void mark_latent(const std::string& name) { verts_[idx(name)].latent = true; }

    void set_roles(graph_roles r) {
        if (!r.target.empty()) idx(r.target);
        for (const auto& e : r.effect) idx(e);
        for (const auto& s : r.adjust) idx(s);
        if (!r.mediator.empty()) idx(r.mediator);
        roles_ = std::move(r);
    }

    // Throws if a directed cycle exists; otherwise records a topological order.
    void finalize() {
        topo_.clear();
        std::vector<int> indeg(verts_.size(), 0);
        for (size_t v = 0; v < verts_.size(); ++v) indeg[v] = static_cast<int>(parents_[v].size());
        std::deque<size_t> q;
        for (size_t v = 0; v < verts_.size(); ++v)
            if (indeg[v] == 0) q.push_back(v);
        while (!q.empty()) {
            size_t v = q.front();
            q.pop_front();
            topo_.push_back(v);
            for (size_t c : children_[v])
                if (--indeg[c] == 0) q.push_back(c);
        }
        if (topo_.size() != verts_.size()) {
            for (size_t v = 0; v < verts_.size(); ++v)
                if (indeg[v] > 0)
                    throw config_error("graph contains a directed cycle through '" +
                                       verts_[v].name + "'");
        }
    }

    size_t n_vertices() const { return verts_.size(); }
    bool has(const std::string& name) const { return index_.count(name) > 0; }
    const variable_info& info(const std::string& name) const { return verts_[idx(name)]; }
    const graph_roles& roles() const { return roles_; }

    std::vector<std::string> vertex_names() const {
        std::vector<std::string> out;
        for (size_t v : topo_) out.push_back(verts_[v].name);
        return out;
    }

    std::set<std::string> parents(const std::string& name) const {
        std::set<std::string> out;
        for (size_t p : parents_[idx(name)]) out.insert(verts_[p].name);
        return out;
    }

    std::set<std::string> children(const std::string& name) const {
        std::set<std::string> out;
        for (size_t c : children_[idx(name)]) out.insert(verts_[c].name);
        return out;
    }

    // Proper descendants (excludes the vertex itself).
    std::set<std::string> descendants(const std::string& name) const {
        std::set<std::string> out;
        std::deque<size_t> q(children_[idx(name)].begin(), children_[idx(name)].end());
        while (!q.empty()) {
            size_t v = q.front();
            q.pop_front();
            if (out.insert(verts_[v].name).second)
                for (size_t c : children_[v]) q.push_back(c);
        }
        return out;
    }

    // True iff S d-separates A from B: every path between A and B is blocked
    // (chain/fork blocked when its middle vertex is in S, collider blocked
    // when neither it nor any descendant is in S). Reachability formulation,
    // O(E) rather than path enumeration.
    bool d_separated(const std::set<std::string>& A, const std::set<std::string>& B,
                     const std::set<std::string>& S) const {
        auto a = to_ids(A), b = to_ids(B), s = to_ids(S);
        for (size_t v : a)
            if (s.count(v) || b.count(v)) throw data_error("d-separation query sets must be disjoint");
        for (size_t v : b)
            if (s.count(v)) throw data_error("d-separation query sets must be disjoint");

        // ancestors of S (including S): colliders in this set are active
        std::set<size_t> anc = s;
        std::deque<size_t> q(s.begin(), s.end());
        while (!q.empty()) {
            size_t v = q.front();
            q.pop_front();
            for (size_t p : parents_[v])
                if (anc.insert(p).second) q.push_back(p);
        }

        // (vertex, entered-from-child?) reachability walk
        std::vector<std::array<bool, 2>> seen(verts_.size(), {false, false});
        std::deque<std::pair<size_t, bool>> work;  // bool: approached from a child (against edges)
        for (size_t v : a) work.emplace_back(v, true);
        while (!work.empty()) {
            auto [v, from_child] = work.front();
            work.pop_front();
            if (seen[v][from_child]) continue;
            seen[v][from_child] = true;
            if (!s.count(v) && b.count(v)) return false;
            if (from_child) {
                if (!s.count(v)) {
                    for (size_t p : parents_[v]) work.emplace_back(p, true);
                    for (size_t c : children_[v]) work.emplace_back(c, false);
                }
            } else {
                if (!s.count(v))
                    for (size_t c : children_[v]) work.emplace_back(c, false);
                if (anc.count(v))
                    for (size_t p : parents_[v]) work.emplace_back(p, true);
            }
        }
        return true;
    }

    // Back-door criterion for adjustment set S relative to intervention y and
    // effect x. Returns the violated clause, or nullopt when admissible.
    std::optional<std::string> backdoor_violation(const std::set<std::string>& S,
                                                  const std::string& y,
                                                  const std::string& x) const {
        idx(y);
        idx(x);
        if (S.count(y) || S.count(x))
            throw data_error("adjustment set overlaps intervention or effect variable");
        for (const auto& s : S)
            if (info(s).latent)
                return "adjustment variable '" + s + "' is latent (unobservable)";
        auto desc = descendants(y);
        for (const auto& s : S)
            if (desc.count(s))
                return "adjustment variable '" + s + "' is a descendant of '" + y + "'";
        causal_graph pruned = without_outgoing(y);
        if (!pruned.d_separated({y}, {x}, S))
            return "unblocked back-door path between '" + y + "' and '" + x + "' given {" +
                   join(S) + "}";
        return std::nullopt;
    }

    bool validate_backdoor(const std::set<std::string>& S, const std::string& y,
                           const std::string& x) const {
        return !backdoor_violation(S, y, x).has_value();
    }

    // Front-door criterion for mediator z relative to intervention y and
    // effect x. Returns the violated clause, or nullopt when admissible.
    std::optional<std::string> frontdoor_violation(const std::string& z, const std::string& y,
                                                   const std::string& x) const {
        idx(z);
        idx(y);
        idx(x);
        if (z == y || z == x || y == x)
            throw data_error("front-door variables z, y, x must be distinct");
        if (info(z).latent) return "mediator '" + z + "' is latent (unobservable)";
        if (directed_path_avoiding(y, x, z))
            return "mediator '" + z + "' does not intercept all directed paths from '" + y +
                   "' to '" + x + "'";
        causal_graph no_out_z = without_outgoing(z);
        if (!no_out_z.d_separated({z}, {x}, {y}))
            return "back-door path from '" + z + "' to '" + x + "' not blocked by '" + y + "'";
        causal_graph no_out_y = without_outgoing(y);
        if (!no_out_y.d_separated({y}, {z}, {}))
            return "unblocked back-door path between '" + y + "' and mediator '" + z + "'";
        return std::nullopt;
    }

    bool validate_frontdoor(const std::string& z, const std::string& y,
                            const std::string& x) const {
        return !frontdoor_violation(z, y, x).has_value();
    }

private:
    size_t idx(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw data_error("unknown variable '" + name + "'");
        return it->second;
    }

    std::set<size_t> to_ids(const std::set<std::string>& names) const {
        std::set<size_t> out;
        for (const auto& n : names) out.insert(idx(n));
        return out;
    }

    causal_graph without_outgoing(const std::string& v) const {
        causal_graph g;
        for (const auto& vi : verts_) g.add_vertex(vi);
        size_t vi = idx(v);
        for (size_t b = 0; b < verts_.size(); ++b)
            for (size_t a : parents_[b])
                if (a != vi) g.add_edge(verts_[a].name, verts_[b].name);
        g.finalize();
        return g;
    }

    // Is there a directed path from -> to that avoids 'avoid'?
    bool directed_path_avoiding(const std::string& from, const std::string& to,
                                const std::string& avoid) const {
        size_t f = idx(from), t = idx(to), av = idx(avoid);
        std::set<size_t> seen{f};
        std::deque<size_t> q{f};
        while (!q.empty()) {
            size_t v = q.front();
            q.pop_front();
            for (size_t c : children_[v]) {
                if (c == av) continue;
                if (c == t) return true;
                if (seen.insert(c).second) q.push_back(c);
            }
        }
        return false;
    }

    static std::string join(const std::set<std::string>& s) {
        std::string out;
        for (const auto& v : s) {
            if (!out.empty()) out += ",";
            out += v;
        }
        return out;
    }

    std::vector<variable_info> verts_;
    std::map<std::string, size_t> index_;
    std::vector<std::vector<size_t>> parents_;
    std::vector<std::vector<size_t>> children_;
    std::vector<size_t> topo_;
    graph_roles roles_;
};

// --- graph-spec text format ---
//
// One declaration per line, '#' starts a comment:
//   var <name> discrete <k>
//   var <name> continuous <d>
//   latent <name>
//   edge <a> -> <b>
//   role target <name>
//   role effect <name,...>
//   role adjust <name,...>
//   role mediator <name>
namespace detail {

struct line_lexer {
    std::string_view text;
    size_t pos = 0;

    // returns token and its 1-based column; empty token at end of line
    std::pair<std::string, size_t> next() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
        size_t start = pos;
        while (pos < text.size() && text[pos] != ' ' && text[pos] != '\t') ++pos;
        return {std::string(text.substr(start, pos - start)), start + 1};
    }
};

}  // namespace detail

inline causal_graph parse_graph(std::istream& in, const std::string& filename = "<graph>") {
    causal_graph g;
    graph_roles roles;
    std::vector<std::tuple<std::string, std::string, size_t>> edges;  // a, b, line
    std::vector<std::pair<std::string, size_t>> latents;
    std::string line;
    size_t lineno = 0;

    auto fail = [&](size_t col, const std::string& msg) -> void {
        throw config_error(filename + ":" + std::to_string(lineno) + ":" + std::to_string(col) +
                           ": " + msg);
    };

    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        detail::line_lexer lex{line};
        auto [kw, kwcol] = lex.next();
        if (kw.empty()) continue;

        if (kw == "var") {
            auto [name, c1] = lex.next();
            if (name.empty()) fail(c1, "expected variable name after 'var'");
            auto [kind, c2] = lex.next();
            auto [num, c3] = lex.next();
            int value = 0;
            if (!num.empty()) {
                auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
                if (ec != std::errc{} || p != num.data() + num.size())
                    fail(c3, "expected a positive integer, got '" + num + "'");
            }
            variable_info vi;
            vi.name = name;
            if (kind == "discrete") {
                if (num.empty()) fail(c2 + kind.size(), "expected cardinality after 'discrete'");
                if (value < 2) fail(c3, "discrete cardinality must be >= 2");
                vi.kind = var_kind::discrete;
                vi.cardinality = value;
            } else if (kind == "continuous") {
                if (num.empty()) fail(c2 + kind.size(), "expected dimension after 'continuous'");
                if (value < 1) fail(c3, "continuous dimension must be >= 1");
                vi.kind = var_kind::continuous;
                vi.dim = value;
            } else {
                fail(c2, "expected 'discrete' or 'continuous', got '" + kind + "'");
            }
            try {
                g.add_vertex(std::move(vi));
            } catch (const config_error& e) {
                fail(c1, e.what());
            }
        } else if (kw == "latent") {
            auto [name, c1] = lex.next();
            if (name.empty()) fail(c1, "expected variable name after 'latent'");
            latents.emplace_back(name, lineno);
        } else if (kw == "edge") {
            auto [a, c1] = lex.next();
            auto [arrow, c2] = lex.next();
            auto [b, c3] = lex.next();
            if (a.empty()) fail(c1, "expected source variable after 'edge'");
            if (arrow != "->") fail(c2, "expected '->' in edge declaration");
            if (b.empty()) fail(c3, "expected destination variable");
            edges.emplace_back(a, b, lineno);
        } else if (kw == "role") {
            auto [which, c1] = lex.next();
            auto [rest, c2] = lex.next();
            if (rest.empty()) fail(c2, "expected variable name(s) after 'role " + which + "'");
            if (which == "target")
                roles.target = rest;
            else if (which == "effect")
                roles.effect = split_list(rest);
            else if (which == "adjust")
                roles.adjust = split_list(rest);
            else if (which == "mediator")
                roles.mediator = rest;
            else
                fail(c1, "unknown role '" + which + "'");
        } else {
            fail(kwcol, "unknown declaration '" + kw + "'");
        }
    }

    for (const auto& [a, b, ln] : edges) {
        lineno = ln;
        if (!g.has(a)) fail(6, "edge references undeclared variable '" + a + "'");
        if (!g.has(b)) fail(6, "edge references undeclared variable '" + b + "'");
        try {
            g.add_edge(a, b);
        } catch (const config_error& e) {
            fail(6, e.what());
        }
    }
    for (const auto& [name, ln] : latents) {
        lineno = ln;
        if (!g.has(name)) fail(8, "latent flag references undeclared variable '" + name + "'");
        g.mark_latent(name);
    }
    try {
        g.set_roles(roles);
        g.finalize();
    } catch (const error& e) {
        throw config_error(filename + ": " + e.what());
    }
    return g;
}

inline causal_graph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open graph file '" + path + "'");
    return parse_graph(in, path);
}

inline std::string graph_to_text(const causal_graph& g) {
    std::ostringstream out;
    for (const auto& name : g.vertex_names()) {
        const auto& vi = g.info(name);
        if (vi.kind == var_kind::discrete)
            out << "var " << name << " discrete " << vi.cardinality << "\n";
        else
            out << "var " << name << " continuous " << vi.dim << "\n";
    }
    for (const auto& name : g.vertex_names())
        if (g.info(name).latent) out << "latent " << name << "\n";
    for (const auto& child : g.vertex_names())
        for (const auto& p : g.parents(child)) out << "edge " << p << " -> " << child << "\n";
    const auto& r = g.roles();
    if (!r.target.empty()) out << "role target " << r.target << "\n";
    if (!r.effect.empty()) {
        out << "role effect ";
        for (size_t i = 0; i < r.effect.size(); ++i) out << (i ? "," : "") << r.effect[i];
        out << "\n";
    }
    if (!r.adjust.empty()) {
        out << "role adjust ";
        for (size_t i = 0; i < r.adjust.size(); ++i) out << (i ? "," : "") << r.adjust[i];
        out << "\n";
    }
    if (!r.mediator.empty()) out << "role mediator " << r.mediator << "\n";
    return out.str();
}

}  // namespace causalboot
