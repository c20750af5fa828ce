#pragma once

#include <string>
#include <string_view>

namespace mtrans::utf8 {

// Decodes UTF-8 into Unicode scalar values. Throws InputError on malformed
// sequences, overlongs, surrogates and values above U+10FFFF.
std::u32string decode(std::string_view bytes);

std::string encode(std::u32string_view text);
std::string encode(char32_t c);

bool is_valid(std::string_view bytes);

}  // namespace mtrans::utf8
