#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace spanforge::utf8 {

// Throws FormatError on malformed input.
std::u32string decode(std::string_view bytes);

std::string encode(std::u32string_view chars);
void append(std::string& out, char32_t c);

bool is_valid(std::string_view bytes);

// Number of Unicode scalar values.
std::size_t length(std::string_view bytes);

// Substring by scalar-value indices [begin, end).
std::string slice(std::string_view bytes, std::size_t begin, std::size_t end);

bool is_space(char32_t c);
bool is_punct(char32_t c);
bool is_digit(char32_t c);
bool is_letter_like(char32_t c);
// Han, kana and Hangul.
bool is_cjk(char32_t c);

// Simple case folding for Latin, Greek and Cyrillic; other scripts unchanged.
char32_t to_lower(char32_t c);
std::u32string to_lower(std::u32string_view s);

}  // namespace spanforge::utf8
