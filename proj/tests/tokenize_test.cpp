#include "mbrsel/tokenize.hpp"

#include <gtest/gtest.h>

#include <string>
#include <vector>

using mbrsel::TokenizerMode;
using mbrsel::TokenizerOptions;
using mbrsel::tokenize;

namespace {

std::vector<std::string> toks(const std::string& s, TokenizerOptions opt = {}) {
    return tokenize(s, opt);
}

TEST(Tokenize, PunctSplitBasic) {
    EXPECT_EQ(toks("Hello, world!"),
              (std::vector<std::string>{"hello", ",", "world", "!"}));
}

TEST(Tokenize, WhitespaceModeKeepsPunctAttached) {
    TokenizerOptions opt;
    opt.mode = TokenizerMode::whitespace;
    EXPECT_EQ(toks("Hello, world!", opt),
              (std::vector<std::string>{"hello,", "world!"}));
}

TEST(Tokenize, NoLowercase) {
    TokenizerOptions opt;
    opt.lowercase = false;
    EXPECT_EQ(toks("Hello, World!", opt),
              (std::vector<std::string>{"Hello", ",", "World", "!"}));
}

TEST(Tokenize, UnicodeWhitespaceSplits) {
    // U+00A0 no-break space and U+3000 ideographic space both separate tokens.
    EXPECT_EQ(toks("a\xC2\xA0"
                   "b"),
              (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(toks("a\xE3\x80\x80"
                   "b"),
              (std::vector<std::string>{"a", "b"}));
}

TEST(Tokenize, ApostropheSplitsAsPunct) {
    EXPECT_EQ(toks("don't"), (std::vector<std::string>{"don", "'", "t"}));
}

TEST(Tokenize, HyphensSplit) {
    EXPECT_EQ(toks("state-of-the-art"),
              (std::vector<std::string>{"state", "-", "of", "-", "the", "-", "art"}));
}

TEST(Tokenize, SymbolsAreNotPunctuation) {
    // '$' and '+' are symbol-category characters, not punctuation; they stay
    // attached to their word run.
    EXPECT_EQ(toks("$5"), (std::vector<std::string>{"$5"}));
    EXPECT_EQ(toks("a+b"), (std::vector<std::string>{"a+b"}));
}

TEST(Tokenize, CjkPunctuationSplits) {
    // U+3002 ideographic full stop is punctuation.
    EXPECT_EQ(toks("\xE4\xBD\xA0\xE5\xA5\xBD\xE3\x80\x82"),
              (std::vector<std::string>{"\xE4\xBD\xA0\xE5\xA5\xBD", "\xE3\x80\x82"}));
}

TEST(Tokenize, EmptyAndWhitespaceOnly) {
    EXPECT_TRUE(toks("").empty());
    EXPECT_TRUE(toks("   \t\n  ").empty());
}

TEST(Tokenize, MalformedUtf8DoesNotCrash) {
    // A lone continuation byte and a truncated sequence are consumed without
    // throwing; the result still contains the valid ASCII around them.
    const std::string bad = "ok \x80 \xE4\xBD end";
    const auto out = toks(bad);
    ASSERT_GE(out.size(), 2u);
    EXPECT_EQ(out.front(), "ok");
    EXPECT_EQ(out.back(), "end");
}

TEST(Tokenize, LowercasesNonAscii) {
    // U+00C9 LATIN CAPITAL LETTER E WITH ACUTE -> U+00E9.
    EXPECT_EQ(toks("CAF\xC3\x89"), (std::vector<std::string>{"caf\xC3\xA9"}));
}

TEST(Tokenize, MixedDigitsAndLetters) {
    EXPECT_EQ(toks("room 101."), (std::vector<std::string>{"room", "101", "."}));
}

TEST(Tokenize, ConsecutivePunctuationEachOwnToken) {
    EXPECT_EQ(toks("wait..."), (std::vector<std::string>{"wait", ".", ".", "."}));
}

}  // namespace
