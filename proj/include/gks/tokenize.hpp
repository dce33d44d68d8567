#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gks {

// Returned for text without a single ASCII alphanumeric character.
inline constexpr const char* kEmptyToken = "⟨empty⟩";

// Lowercases and splits on every non-alphanumeric byte; empty pieces are dropped.
std::vector<std::string> tokenize(std::string_view text);

// Same split rule, but returns an empty vector instead of the sentinel.
std::vector<std::string> split_words(std::string_view text);

}  // namespace gks
