#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "vloc/common/error.hpp"
#include "vloc/nn/prng.hpp"

namespace vloc::datagen {

VLOC_DEFINE_ERROR(InvalidSpec);

enum class VulnKind { BufferOverrun, IntegerOverflow, DivideByZero, NullDereference, UninitializedValue, DeadStore };

inline constexpr std::array<VulnKind, 6> kAllKinds = {
    VulnKind::BufferOverrun,   VulnKind::IntegerOverflow,    VulnKind::DivideByZero,
    VulnKind::NullDereference, VulnKind::UninitializedValue, VulnKind::DeadStore,
};

std::string_view to_string(VulnKind k);
VulnKind vuln_kind_from_string(std::string_view s);

enum class Difficulty { Easy, Hard };

std::string_view to_string(Difficulty d);
Difficulty difficulty_from_string(std::string_view s);

/// A generated function in its vulnerable form plus the one-line fix.
struct TemplateInstance {
    std::string function_name;
    std::vector<std::string> lines;
    std::size_t sink = 0; // index of the vulnerable line
    std::string safe_line;

    int sink_line() const { return static_cast<int>(sink) + 1; }
    std::string source(bool vulnerable) const;
};

/// Easy: fixed identifiers, a few benign statements around the sink.
/// Hard: renamed identifiers, 5–30 distractors (some of them safe
/// lookalikes of sinks), sink variables declared at least 10 lines before
/// the sink, and the sink nested inside control flow.
TemplateInstance instantiate(VulnKind kind, Difficulty difficulty, const std::string& function_name, nn::Prng& prng);

} // namespace vloc::datagen
