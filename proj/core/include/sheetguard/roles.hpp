#pragma once

#include <optional>
#include <string_view>

namespace sheetguard {

/// What a non-empty cell is for: constants are INPUT (referenced) or LABEL,
/// formulas are CODE (referenced) or OUTPUT.
enum class Role { Input, Code, Output, Label };

std::string_view to_string(Role role) noexcept;
/// Accepts "input", "INPUT", ...
std::optional<Role> parse_role(std::string_view text) noexcept;

inline bool is_constant_role(Role r) noexcept { return r == Role::Input || r == Role::Label; }

}  // namespace sheetguard
