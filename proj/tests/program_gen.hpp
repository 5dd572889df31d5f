#pragma once
// Random MiniC functions for property tests.

#include <random>
#include <string>
#include <vector>

namespace testgen {

struct ProgramGen {
    std::mt19937_64 rng;
    bool loops = true;
    int budget = 12; // statement-level nodes still allowed
    std::vector<std::string> vars = {"a", "b", "c", "x", "y"};

    explicit ProgramGen(std::uint64_t seed, bool allow_loops = true, int max_stmts = 12)
        : rng(seed), loops(allow_loops), budget(max_stmts) {}

    int pick(int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }
    const std::string& var() { return vars[static_cast<std::size_t>(pick(static_cast<int>(vars.size())))]; }

    std::string expr(int depth = 0) {
        const int r = pick(depth > 2 ? 3 : 8);
        switch (r) {
        case 0: return var();
        case 1: return std::to_string(pick(300));
        case 2: return "n";
        case 3: return expr(depth + 1) + " + " + expr(depth + 1);
        case 4: return "(" + expr(depth + 1) + " * " + var() + ")";
        case 5: return "buf[" + expr(depth + 1) + "]";
        case 6: return "-" + var();
        default: return "g(" + expr(depth + 1) + ", " + var() + ")";
        }
    }

    std::string cond() {
        static const char* ops[] = {"<", "<=", ">", "==", "!="};
        return var() + " " + ops[pick(5)] + " " + expr(2);
    }

    void stmt(std::string& out, int depth, bool last_in_block) {
        if (budget <= 0) return;
        --budget;
        const std::string ind(static_cast<std::size_t>(depth) * 2, ' ');
        int r = pick(depth > 2 ? 4 : (loops ? 9 : 7));
        if (r == 3 && !last_in_block) r = 0;
        switch (r) {
        case 0: out += ind + var() + " = " + expr() + ";\n"; break;
        case 1: out += ind + "buf[" + var() + "] = " + expr() + ";\n"; break;
        case 2: out += ind + "h(" + var() + ");\n"; break;
        case 3: out += ind + "return " + expr() + ";\n"; break;
        case 4:
        case 5: {
            out += ind + "if (" + cond() + ") {\n";
            block(out, depth + 1);
            if (r == 5) {
                out += ind + "} else {\n";
                block(out, depth + 1);
            }
            out += ind + "}\n";
            break;
        }
        case 6: out += ind + "*p = " + var() + ";\n"; break;
        case 7:
            out += ind + "while (" + cond() + ") {\n";
            block(out, depth + 1);
            out += ind + "}\n";
            break;
        default:
            out += ind + "for (" + var() + " = 0; " + cond() + "; x = x + 1) {\n";
            block(out, depth + 1);
            out += ind + "}\n";
        }
    }

    void block(std::string& out, int depth) {
        const int n = 1 + pick(3);
        for (int i = 0; i < n; ++i) stmt(out, depth, i == n - 1);
    }

    std::string function() {
        std::string out = "int f(int n, int *p) {\n  int buf[16];\n";
        budget -= 2; // buf and the final return
        for (const auto& v : vars) {
            if (pick(2) == 0 && budget > 0) {
                out += "  int " + v + " = " + std::to_string(pick(9)) + ";\n";
                --budget;
            }
        }
        while (budget > 0) stmt(out, 1, false);
        out += "  return a;\n}\n";
        return out;
    }
};

} // namespace testgen
