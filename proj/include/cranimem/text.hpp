#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cranimem {

std::string trim(std::string_view s);

// Case-fold (ASCII), trim, collapse internal whitespace. This is the merge key
// for entities and relations everywhere in the engine.
std::string normalize_name(std::string_view s);

// Keeps the first spelling of each entity, drops later case-insensitive
// duplicates and blanks.
std::vector<std::string> dedupe_entities(const std::vector<std::string>& entities);

std::vector<std::string> split(std::string_view s, char sep);

bool starts_with_icase(std::string_view s, std::string_view prefix);

}  // namespace cranimem
