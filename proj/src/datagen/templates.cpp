#include "vloc/datagen/templates.hpp"

#include <map>
#include <set>

namespace vloc::datagen {

namespace {

constexpr std::array<std::string_view, 6> kKindNames = {"BufferOverrun",   "IntegerOverflow",    "DivideByZero",
                                                        "NullDereference", "UninitializedValue", "DeadStore"};

// Identifier source: the role name itself (easy) or a fresh random name (hard).
class Namer {
  public:
    Namer(nn::Prng& prng, bool rename) : prng_(prng), rename_(rename) {}

    std::string operator()(const std::string& role) {
        if (!rename_) return role;
        auto it = names_.find(role);
        if (it != names_.end()) return it->second;
        static constexpr std::array<std::string_view, 16> syl = {"ka", "lo", "mi", "ru", "te", "zo", "ba", "ne",
                                                                 "si", "vu", "da", "fe", "gu", "hi", "jo", "pe"};
        std::string name;
        do {
            name.clear();
            const auto n = 2 + prng_.below(2);
            for (std::uint64_t i = 0; i < n; ++i) name += syl[prng_.below(syl.size())];
            if (prng_.below(3) == 0) name += std::to_string(prng_.below(10));
        } while (!used_.insert(name).second);
        return names_[role] = name;
    }

  private:
    nn::Prng& prng_;
    bool rename_;
    std::map<std::string, std::string> names_;
    std::set<std::string> used_;
};

int pick(nn::Prng& prng, int lo, int hi) { return lo + static_cast<int>(prng.below(static_cast<std::uint64_t>(hi - lo + 1))); }

std::string num(int v) { return std::to_string(v); }

struct Core {
    std::vector<std::string> decls;
    std::vector<std::string> before;
    std::string wrap; // block header enclosing the sink, if any
    std::string sink;
    std::string safe;
    std::vector<std::string> after;
    std::vector<std::string> ret;
};

Core make_core(VulnKind kind, Namer& name, nn::Prng& prng) {
    const auto n = name("n"), m = name("m"), p = name("p");
    Core c;
    switch (kind) {
    case VulnKind::BufferOverrun: {
        const auto buf = name("buf"), i = name("i");
        const auto size = num(std::array{8, 16, 32, 64}[prng.below(4)]);
        const auto val = prng.below(2) ? n : m;
        const auto write = buf + "[" + i + "] = " + val + ";";
        c.decls = {"int " + buf + "[" + size + "];", "int " + i + ";"};
        c.wrap = "for (" + i + " = 0; " + i + " <= " + size + "; " + i + " = " + i + " + 1) {";
        c.sink = write;
        c.safe = "if (" + i + " < " + size + ") { " + write + " }";
        c.ret = {buf + "[0]"};
        break;
    }
    case VulnKind::IntegerOverflow: {
        const auto r = name("r");
        const auto a = prng.below(2) ? n : m, b = prng.below(2) ? n : m;
        const auto expr = r + " = " + a + " * " + b + ";";
        const auto guard = a == b ? a + " < 46340" : a + " < 46340 && " + b + " < 46340";
        c.decls = {"int " + r + " = 0;"};
        c.sink = expr;
        c.safe = "if (" + guard + ") { " + expr + " }";
        c.ret = {r};
        break;
    }
    case VulnKind::DivideByZero: {
        const auto q = name("q");
        const auto top = prng.below(2) ? n : num(pick(prng, 10, 200));
        const auto expr = q + " = " + top + " / " + m + ";";
        c.decls = {"int " + q + " = 0;"};
        c.sink = expr;
        c.safe = "if (" + m + " != 0) { " + expr + " }";
        c.ret = {q};
        break;
    }
    case VulnKind::NullDereference: {
        const auto expr = "*" + p + " = " + (prng.below(2) ? n : m) + ";";
        c.sink = expr;
        c.safe = "if (" + p + " != 0) { " + expr + " }";
        c.ret = {n};
        break;
    }
    case VulnKind::UninitializedValue: {
        const auto u = name("u"), r = name("r");
        const auto expr = r + " = " + u + " + " + (prng.below(2) ? n : m) + ";";
        c.decls = {"int " + u + ";", "int " + r + " = 0;"};
        c.sink = expr;
        c.safe = u + " = 0; " + expr;
        c.ret = {r};
        break;
    }
    case VulnKind::DeadStore: {
        const auto x = name("x"), y = name("y");
        const auto rhs = n + " * " + num(pick(prng, 2, 9)) + ";";
        c.decls = {"int " + x + " = 0;", "int " + y + " = 0;"};
        c.sink = x + " = " + rhs;
        c.safe = y + " = " + rhs;
        c.after = {x + " = " + m + " + " + num(pick(prng, 1, 9)) + ";"};
        c.ret = {x, y};
        break;
    }
    }
    return c;
}

class Block {
  public:
    explicit Block(int depth) : depth_(depth) {}
    void line(const std::string& s) { lines_.push_back(std::string(static_cast<std::size_t>(depth_) * 2, ' ') + s); }
    void open(const std::string& s) {
        line(s);
        ++depth_;
    }
    void close() {
        --depth_;
        line("}");
    }
    int depth() const { return depth_; }
    std::vector<std::string>& lines() { return lines_; }

  private:
    int depth_;
    std::vector<std::string> lines_;
};

// Benign statements over fresh accumulators; every stored value is read later.
struct Fillers {
    Fillers(Namer& n, nn::Prng& p) : name(n), prng(p) {}

    Namer& name;
    nn::Prng& prng;
    std::vector<std::string> decls;
    std::vector<std::string> vars;
    int fresh = 0;

    std::string new_var(const std::string& role, const std::string& init) {
        const auto v = name(role + num(fresh++));
        decls.push_back("int " + v + (init.empty() ? "" : " = " + init) + ";");
        return v;
    }
    std::string any_var() {
        if (vars.empty() || (vars.size() < 4 && prng.below(4) == 0))
            vars.push_back(new_var("t", name(prng.below(2) ? "n" : "m") + " + " + num(pick(prng, 1, 9))));
        return vars[prng.below(vars.size())];
    }

    void easy(Block& b) {
        switch (prng.below(4)) {
        case 0: vars.push_back(new_var("t", name(prng.below(2) ? "n" : "m") + " + " + num(pick(prng, 1, 9)))); break;
        case 1: {
            const auto v = any_var();
            b.line(v + " = " + v + " + " + num(pick(prng, 1, 20)) + ";");
            break;
        }
        case 2: {
            const auto v = any_var();
            b.line("if (" + v + " > " + num(pick(prng, 10, 99)) + ") { " + v + " = " + v + " - " +
                   num(pick(prng, 1, 9)) + "; }");
            break;
        }
        default: {
            const auto v = any_var();
            b.line("log_value(" + v + ");");
        }
        }
    }

    void hard(Block& b, int budget_depth) {
        const auto n = name("n"), m = name("m"), p = name("p");
        const int r = static_cast<int>(prng.below(budget_depth > 0 ? 13 : 11));
        switch (r) {
        case 0: {
            const auto v = any_var();
            const auto w = any_var();
            b.line(v + " = " + v + " + " + w + ";");
            break;
        }
        case 1: {
            const auto v = any_var();
            b.line(v + " = " + v + " * " + num(pick(prng, 2, 5)) + ";");
            break;
        }
        case 2: b.line("if (" + p + " != 0) { *" + p + " = " + any_var() + "; }"); break;
        case 3: // guard on the enclosing block, deref on its own line
            b.open("if (" + p + " != 0) {");
            b.line("*" + p + " = " + any_var() + ";");
            b.close();
            break;
        case 4: {
            const auto v = any_var();
            b.line(v + " = " + v + " / " + num(pick(prng, 2, 9)) + ";");
            break;
        }
        case 5: {
            const auto v = any_var();
            b.open("if (" + m + " != 0) {");
            b.line(v + " = " + v + " + " + n + " / " + m + ";");
            b.close();
            break;
        }
        case 6: {
            const auto j = loop_var();
            const auto v = any_var();
            b.line("for (" + j + " = 0; " + j + " <= " + num(pick(prng, 3, 40)) + "; " + j + " = " + j +
                   " + 1) { " + v + " = " + v + " + " + j + "; }");
            break;
        }
        case 7: {
            const auto j = loop_var();
            const auto size = pick(prng, 4, 40);
            const auto arr = new_var("arr", "");
            decls.back() = "int " + arr + "[" + num(size) + "];";
            vars_extra.push_back(arr + "[0]");
            b.line("for (" + j + " = 0; " + j + " < " + num(size) + "; " + j + " = " + j + " + 1) { " + arr +
                   "[" + j + "] = " + j + "; }");
            break;
        }
        case 8: {
            const auto k = new_var("k", num(pick(prng, 2, 99)));
            const auto v = any_var();
            b.line(v + " = " + v + " + " + k + " * " + k + ";");
            break;
        }
        case 9: {
            // assigned before its first read: not an uninitialized use
            const auto w = new_var("w", "");
            const auto s = new_var("s", "0");
            vars_extra.push_back(s);
            b.line(w + " = " + num(pick(prng, 0, 9)) + ";");
            b.line(s + " = " + w + " + " + (prng.below(2) ? n : m) + ";");
            break;
        }
        case 10: {
            const auto z = new_var("z", "0");
            vars_extra.push_back(z);
            b.line(z + " = " + n + " * " + num(pick(prng, 2, 9)) + ";");
            break;
        }
        case 11: {
            const auto v = any_var();
            b.open("while (" + v + " < " + num(pick(prng, 10, 99)) + ") {");
            b.line(v + " = " + v + " + " + num(pick(prng, 1, 7)) + ";");
            hard(b, budget_depth - 1);
            b.close();
            break;
        }
        default: {
            const auto v = any_var();
            b.open("if (" + v + " > " + num(pick(prng, 0, 50)) + ") {");
            hard(b, budget_depth - 1);
            hard(b, budget_depth - 1);
            b.close();
        }
        }
    }

    std::string loop_var() {
        if (loop_.empty()) loop_ = new_var("j", "");
        return loop_;
    }

    std::vector<std::string> return_terms() const {
        std::vector<std::string> out = vars;
        out.insert(out.end(), vars_extra.begin(), vars_extra.end());
        return out;
    }

    std::vector<std::string> vars_extra;
    std::string loop_;
};

std::string join_sum(const std::vector<std::string>& terms) {
    std::string s;
    for (const auto& t : terms) s += (s.empty() ? "" : " + ") + t;
    return s;
}

} // namespace

std::string_view to_string(VulnKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

VulnKind vuln_kind_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (kKindNames[i] == s) return kAllKinds[i];
    throw InvalidSpec("unknown template kind '" + std::string(s) + "'");
}

std::string_view to_string(Difficulty d) { return d == Difficulty::Easy ? "easy" : "hard"; }

Difficulty difficulty_from_string(std::string_view s) {
    if (s == "easy") return Difficulty::Easy;
    if (s == "hard") return Difficulty::Hard;
    throw InvalidSpec("unknown difficulty '" + std::string(s) + "'");
}

std::string TemplateInstance::source(bool vulnerable) const {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i == sink && !vulnerable) {
            // keep the sink's indentation
            out += lines[i].substr(0, lines[i].find_first_not_of(' ')) + safe_line;
        } else {
            out += lines[i];
        }
        out += '\n';
    }
    return out;
}

TemplateInstance instantiate(VulnKind kind, Difficulty difficulty, const std::string& function_name, nn::Prng& prng) {
    const bool hard = difficulty == Difficulty::Hard;
    Namer name(prng, hard);
    const Core core = make_core(kind, name, prng);
    Fillers fill(name, prng);

    Block pre(1), mid(1), post(1);
    if (!hard) {
        for (int i = pick(prng, 0, 3); i > 0; --i) fill.easy(pre);
        for (int i = pick(prng, 0, 3); i > 0; --i) fill.easy(post);
    } else {
        int budget = pick(prng, 5, 30);
        // distractors between the sink variables' declarations and the sink
        while (pre.lines().size() < 10) {
            fill.hard(pre, 1);
            --budget;
        }
        for (; budget > 0; --budget) fill.hard(prng.below(2) ? pre : post, 1);
    }

    // the sink, possibly nested
    std::size_t sink_in_mid = 0;
    int opened = hard ? pick(prng, 1, 2) : 0;
    std::string counter;
    for (int level = 0; level < opened; ++level) {
        if (level == 0 && prng.below(2) == 0) {
            counter = fill.new_var("c", "0");
            mid.open("while (" + counter + " < " + num(pick(prng, 2, 9)) + ") {");
        } else {
            mid.open("if (" + name(prng.below(2) ? "n" : "m") + " > " + num(pick(prng, 0, 50)) + ") {");
        }
    }
    for (const auto& l : core.before) mid.line(l);
    if (!core.wrap.empty()) mid.open(core.wrap);
    sink_in_mid = mid.lines().size();
    mid.line(core.sink);
    if (!core.wrap.empty()) mid.close();
    for (const auto& l : core.after) mid.line(l);
    for (int level = 0; level < opened; ++level) {
        if (level == opened - 1 && !counter.empty()) mid.line(counter + " = " + counter + " + 1;");
        mid.close();
    }

    TemplateInstance t;
    t.function_name = function_name;
    t.lines.push_back("int " + function_name + "(int " + name("n") + ", int " + name("m") + ", int *" + name("p") +
                      ") {");
    for (const auto& d : core.decls) t.lines.push_back("  " + d);
    for (const auto& d : fill.decls) t.lines.push_back("  " + d);
    t.lines.insert(t.lines.end(), pre.lines().begin(), pre.lines().end());
    t.sink = t.lines.size() + sink_in_mid;
    t.lines.insert(t.lines.end(), mid.lines().begin(), mid.lines().end());
    t.lines.insert(t.lines.end(), post.lines().begin(), post.lines().end());
    auto terms = core.ret;
    for (const auto& v : fill.return_terms()) terms.push_back(v);
    t.lines.push_back("  return " + join_sum(terms) + ";");
    t.lines.push_back("}");
    t.safe_line = core.safe;
    return t;
}

} // namespace vloc::datagen
