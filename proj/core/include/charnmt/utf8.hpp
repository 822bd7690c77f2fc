#pragma once

#include <string>

namespace charnmt {

// Decodes UTF-8 to code points; malformed bytes become U+FFFD.
std::u32string utf8_decode(const std::string& bytes);
std::string utf8_encode(const std::u32string& text);
std::string utf8_encode(char32_t cp);

}  // namespace charnmt
