#pragma once

#include <string>
#include <string_view>

namespace lyricmatch {

// Decodes UTF-8 into code points. Invalid bytes become U+FFFD, one
// replacement per rejected byte, so decoding never throws.
std::u32string decode_utf8(std::string_view bytes);

// Encodes code points back to UTF-8. Lone surrogates and out-of-range
// values are encoded as U+FFFD.
std::string encode_utf8(std::u32string_view scalars);

}  // namespace lyricmatch
