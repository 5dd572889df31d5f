#include "vloc/cpg/flow.hpp"

#include <algorithm>
#include <map>

namespace vloc::cpg {

using minic::AstKind;
using minic::AstNode;

namespace {

constexpr int kEntry = -1;

class CfgBuilder {
  public:
    explicit CfgBuilder(const minic::Ast& ast) : ast_(ast) {}

    Cfg run() {
        for (const auto& n : ast_.nodes)
            if (minic::is_statement(n)) cfg_.statements.push_back(n.id);
        process(ast_.root().children.at(1), {kEntry});
        return std::move(cfg_);
    }

  private:
    const minic::Ast& ast_;
    Cfg cfg_;

    void connect(const std::vector<int>& preds, int s) {
        for (int p : preds) {
            if (p == kEntry) {
                if (cfg_.entry < 0) cfg_.entry = s;
            } else {
                cfg_.edges.insert({p, s});
            }
        }
    }

    // Returns the statements whose control falls through to whatever follows.
    std::vector<int> process(int id, std::vector<int> preds) {
        const AstNode& n = ast_[id];
        switch (n.kind) {
        case AstKind::Block:
            for (int c : n.children) preds = process(c, std::move(preds));
            return preds;
        case AstKind::If: {
            connect(preds, id);
            auto exits = process(n.children[1], {id});
            auto other = n.children.size() > 2 ? process(n.children[2], {id}) : std::vector<int>{id};
            for (int o : other)
                if (std::find(exits.begin(), exits.end(), o) == exits.end()) exits.push_back(o);
            return exits;
        }
        case AstKind::While: {
            connect(preds, id);
            connect(process(n.children[1], {id}), id);
            return {id};
        }
        case AstKind::For: {
            const int init = n.children[0];
            const int step = n.children[2];
            connect(preds, init);
            connect({init}, id);
            connect(process(n.children[3], {id}), step);
            connect({step}, id);
            return {id};
        }
        case AstKind::Return:
            connect(preds, id);
            return {};
        default:
            connect(preds, id);
            return {id};
        }
    }
};

std::string ident_name(const AstNode& n) {
    for (const auto& t : n.tokens)
        if (t != "(" && t != ")") return t;
    return {};
}

void collect_idents(const minic::Ast& ast, int id, std::vector<std::string>& out) {
    const AstNode& n = ast[id];
    if (n.kind == AstKind::Identifier) {
        out.push_back(ident_name(n));
        return;
    }
    for (int c : n.children) collect_idents(ast, c, out);
}

void unique_in_order(std::vector<std::string>& v) {
    std::vector<std::string> out;
    for (auto& s : v)
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    v = std::move(out);
}

struct DefSite {
    int node;
    std::string var;
};

} // namespace

Cfg cfg_successors(const minic::Ast& ast) { return CfgBuilder(ast).run(); }

DefUse def_use(const minic::Ast& ast, int stmt) {
    const AstNode& n = ast[stmt];
    DefUse du;
    switch (n.kind) {
    case AstKind::Decl:
        du.strong_def = minic::decl_name(n);
        for (int c : n.children) collect_idents(ast, c, du.uses);
        break;
    case AstKind::Assign: {
        const AstNode& lhs = ast[n.children[0]];
        if (lhs.kind == AstKind::Identifier) {
            du.strong_def = ident_name(lhs);
        } else if (lhs.kind == AstKind::Index) {
            int base = lhs.id;
            while (ast[base].kind == AstKind::Index) {
                collect_idents(ast, ast[base].children[1], du.uses);
                base = ast[base].children[0];
            }
            if (ast[base].kind == AstKind::Identifier)
                du.weak_defs.push_back(ident_name(ast[base]));
            else
                collect_idents(ast, base, du.uses);
        } else {
            collect_idents(ast, lhs.id, du.uses);
        }
        collect_idents(ast, n.children[1], du.uses);
        break;
    }
    case AstKind::If:
    case AstKind::While:
        collect_idents(ast, n.children[0], du.uses);
        break;
    case AstKind::For:
        collect_idents(ast, n.children[1], du.uses);
        break;
    case AstKind::Return:
    case AstKind::Call:
        for (int c : n.children) collect_idents(ast, c, du.uses);
        break;
    default:
        break;
    }
    unique_in_order(du.uses);
    return du;
}

std::vector<int> parameter_decls(const minic::Ast& ast) {
    return ast[ast.root().children.at(0)].children;
}

std::set<NodePair> dfg_edges(const minic::Ast& ast, const Cfg& cfg) {
    std::vector<DefSite> sites;
    std::vector<int> param_sites;
    for (int p : parameter_decls(ast)) {
        param_sites.push_back(static_cast<int>(sites.size()));
        sites.push_back({p, minic::decl_name(ast[p])});
    }

    const std::size_t nstmt = cfg.statements.size();
    std::map<int, std::size_t> slot;
    for (std::size_t i = 0; i < nstmt; ++i) slot[cfg.statements[i]] = i;

    std::vector<DefUse> du(nstmt);
    std::vector<std::vector<int>> gen(nstmt);
    std::vector<std::string> strong(nstmt);
    for (std::size_t i = 0; i < nstmt; ++i) {
        du[i] = def_use(ast, cfg.statements[i]);
        if (!du[i].strong_def.empty()) {
            gen[i].push_back(static_cast<int>(sites.size()));
            sites.push_back({cfg.statements[i], du[i].strong_def});
            strong[i] = du[i].strong_def;
        }
        for (const auto& w : du[i].weak_defs) {
            gen[i].push_back(static_cast<int>(sites.size()));
            sites.push_back({cfg.statements[i], w});
        }
    }

    std::vector<std::vector<std::size_t>> preds(nstmt);
    for (const auto& [a, b] : cfg.edges) preds[slot.at(b)].push_back(slot.at(a));

    const std::size_t nsites = sites.size();
    using Bits = std::vector<char>;
    std::vector<Bits> in(nstmt, Bits(nsites, 0)), out(nstmt, Bits(nsites, 0));

    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < nstmt; ++i) {
            Bits next_in(nsites, 0);
            for (std::size_t p : preds[i])
                for (std::size_t k = 0; k < nsites; ++k) next_in[k] |= out[p][k];
            if (cfg.statements[i] == cfg.entry)
                for (int ps : param_sites) next_in[static_cast<std::size_t>(ps)] = 1;
            Bits next_out = next_in;
            if (!strong[i].empty())
                for (std::size_t k = 0; k < nsites; ++k)
                    if (sites[k].var == strong[i]) next_out[k] = 0;
            for (int g : gen[i]) next_out[static_cast<std::size_t>(g)] = 1;
            if (next_in != in[i] || next_out != out[i]) {
                in[i] = std::move(next_in);
                out[i] = std::move(next_out);
                changed = true;
            }
        }
    }

    std::set<NodePair> edges;
    for (std::size_t i = 0; i < nstmt; ++i)
        for (const auto& v : du[i].uses)
            for (std::size_t k = 0; k < nsites; ++k)
                if (in[i][k] && sites[k].var == v) edges.insert({sites[k].node, cfg.statements[i]});
    return edges;
}

} // namespace vloc::cpg
