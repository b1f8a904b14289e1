#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mbrsel {

enum class TokenizerMode { whitespace, punct_split };

struct TokenizerOptions {
    TokenizerMode mode = TokenizerMode::punct_split;
    bool lowercase = true;
};

inline const char* to_string(TokenizerMode m) {
    return m == TokenizerMode::whitespace ? "whitespace" : "punct_split";
}

namespace detail {

// Decodes one UTF-8 code point starting at s[i]; advances i. A malformed
// byte is consumed on its own and yields its byte value, keeping the
// tokenizer total and deterministic on arbitrary input.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    const unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return b0;
    }
    if (i + len > s.size()) {
        ++i;
        return b0;
    }
    for (int k = 1; k < len; ++k) {
        if ((byte(i + k) & 0xC0) != 0x80) {
            ++i;
            return b0;
        }
        cp = (cp << 6) | (byte(i + k) & 0x3F);
    }
    i += len;
    return cp;
}

inline void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Complete Unicode White_Space list.
inline bool is_unicode_space(char32_t c) {
    switch (c) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200A;
    }
}

// Unicode punctuation (general categories P*). Exact over ASCII and the
// blocks that occur in text-generation output: Latin-1, General
// Punctuation, CJK symbols, fullwidth forms.
inline bool is_unicode_punct(char32_t c) {
    if (c < 0x80) {
        switch (c) {
            case '!': case '"': case '#': case '%': case '&': case '\'':
            case '(': case ')': case '*': case ',': case '-': case '.':
            case '/': case ':': case ';': case '?': case '@': case '[':
            case '\\': case ']': case '_': case '{': case '}':
                return true;
            default:
                return false;
        }
    }
    switch (c) {
        case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
        case 0x30FB: case 0xFF3F: case 0xFF5B: case 0xFF5D:
            return true;
        default:
            break;
    }
    return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
           (c >= 0x3001 && c <= 0x3003) || (c >= 0x3008 && c <= 0x3011) ||
           (c >= 0x3014 && c <= 0x301F) || (c >= 0xFF01 && c <= 0xFF03) ||
           (c >= 0xFF05 && c <= 0xFF0A) || (c >= 0xFF0C && c <= 0xFF0F) ||
           (c >= 0xFF1A && c <= 0xFF1B) || (c >= 0xFF1F && c <= 0xFF20) ||
           (c >= 0xFF3B && c <= 0xFF3D) || (c >= 0xFF5F && c <= 0xFF65);
}

// Simple (one-to-one, locale-free) lowercasing for ASCII, Latin-1,
// Latin Extended-A, Greek and Cyrillic; everything else is unchanged.
inline char32_t simple_lower(char32_t c) {
    if (c >= 'A' && c <= 'Z') return c + 32;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
    if (c >= 0x100 && c <= 0x137) return (c % 2 == 0) ? c + 1 : c;
    if (c >= 0x139 && c <= 0x148) return (c % 2 == 1) ? c + 1 : c;
    if (c >= 0x14A && c <= 0x177) return (c % 2 == 0) ? c + 1 : c;
    if (c == 0x178) return 0xFF;
    if (c == 0x179 || c == 0x17B || c == 0x17D) return c + 1;
    if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
    if (c >= 0x410 && c <= 0x42F) return c + 32;
    if (c >= 0x400 && c <= 0x40F) return c + 80;
    return c;
}

}  // namespace detail

/// Splits UTF-8 text into tokens. whitespace mode splits on Unicode
/// whitespace; punct_split additionally makes every punctuation character
/// its own token. Lowercasing, when enabled, happens first.
inline std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& opt = {}) {
    std::vector<std::string> tokens;
    std::string current;
    const auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    };
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = detail::decode_utf8(text, i);
        if (opt.lowercase) cp = detail::simple_lower(cp);
        if (detail::is_unicode_space(cp)) {
            flush();
        } else if (opt.mode == TokenizerMode::punct_split && detail::is_unicode_punct(cp)) {
            flush();
            std::string punct;
            detail::encode_utf8(cp, punct);
            tokens.push_back(std::move(punct));
        } else {
            detail::encode_utf8(cp, current);
        }
    }
    flush();
    return tokens;
}

}  // namespace mbrsel
