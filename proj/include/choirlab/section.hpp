#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace choirlab {

enum class Section { Soprano = 0, Alto = 1, Tenor = 2, Bass = 3 };

inline constexpr std::array<Section, 4> kAllSections = {Section::Soprano, Section::Alto,
                                                        Section::Tenor, Section::Bass};

inline constexpr const char* to_string(Section s) {
    switch (s) {
        case Section::Soprano: return "soprano";
        case Section::Alto: return "alto";
        case Section::Tenor: return "tenor";
        case Section::Bass: return "bass";
    }
    return "?";
}

/// Accepts the full lowercase name or the single-letter abbreviation.
inline std::optional<Section> section_from_string(std::string_view name) {
    if (name == "soprano" || name == "S" || name == "s") return Section::Soprano;
    if (name == "alto" || name == "A" || name == "a") return Section::Alto;
    if (name == "tenor" || name == "T" || name == "t") return Section::Tenor;
    if (name == "bass" || name == "B" || name == "b") return Section::Bass;
    return std::nullopt;
}

}  // namespace choirlab
