#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ecc {

/// Normalizes free text coming from corpora, users and model backends.
///
/// Whitespace code points (including tab, CR, LF and the ideographic space)
/// become a single ASCII space, other control characters are removed, the
/// result is put in Unicode canonical composition (NFC), whitespace runs are
/// collapsed and the ends trimmed. Invalid UTF-8 sequences are replaced with
/// U+FFFD. The function is idempotent.
std::string clean_text(std::string_view raw);

/// Decodes UTF-8 into Unicode scalar values. Invalid sequences decode to U+FFFD.
std::u32string utf8_to_u32(std::string_view text);

std::string u32_to_utf8(std::u32string_view text);

/// Number of Unicode scalar values in a UTF-8 string.
std::size_t utf8_length(std::string_view text);

/// Fixed-precision rendering used for scores in reports and API bodies.
std::string format_fixed(double value, int decimals = 3);

/// Rounds to `decimals` places (half away from zero).
double round_to(double value, int decimals = 3);

}  // namespace ecc
