#include "mbrsel/utility.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "mbrsel/tokenize.hpp"
#include "testutil.hpp"

using mbrsel::Candidate;
using mbrsel::CandidateSet;
using mbrsel::Error;
using mbrsel::UtilityKind;
using mbrsel::UtilityMatrix;
using mbrsel::UtilityMetric;
using mbrsel::build_utility_matrix;
using mbrsel::embedding_cosine;
using mbrsel::sentence_bleu;
using mbrsel::unigram_f1;

namespace {

using Toks = std::vector<std::string>;

constexpr double kTol = 1e-12;

TEST(SentenceBleu, ThreeVersusFourTokens) {
    const Toks hyp = {"the", "cat", "sat"};
    const Toks ref = {"the", "cat", "sat", "down"};
    // All clipped precisions are 1; only the brevity penalty exp(1 - 4/3)
    // remains.
    EXPECT_NEAR(sentence_bleu(hyp, {ref}), std::exp(1.0 - 4.0 / 3.0), kTol);
    EXPECT_NEAR(sentence_bleu(hyp, {ref}), 0.7165313105737893, kTol);
}

TEST(SentenceBleu, FourVersusThreeTokens) {
    const Toks hyp = {"the", "cat", "sat", "down"};
    const Toks ref = {"the", "cat", "sat"};
    // Precisions 3/4, 3/4, 2/3, 1/2 with add-one smoothing from order 2; the
    // hypothesis is longer than the reference so no brevity penalty.
    EXPECT_NEAR(sentence_bleu(hyp, {ref}), 0.6580370064762462, kTol);
}

TEST(SentenceBleu, IdentityIsOne) {
    const Toks hyp = {"the", "cat", "sat"};
    EXPECT_DOUBLE_EQ(sentence_bleu(hyp, {hyp}), 1.0);
    const Toks longer = {"a", "b", "c", "d", "e", "f"};
    EXPECT_DOUBLE_EQ(sentence_bleu(longer, {longer}), 1.0);
}

TEST(SentenceBleu, EmptyHypothesisIsZero) {
    EXPECT_DOUBLE_EQ(sentence_bleu({}, {Toks{"the", "cat"}}), 0.0);
}

TEST(SentenceBleu, ZeroUnigramOverlapIsZero) {
    EXPECT_DOUBLE_EQ(sentence_bleu(Toks{"x", "y"}, {Toks{"a", "b"}}), 0.0);
}

TEST(SentenceBleu, EmptyReferenceListThrows) {
    EXPECT_THROW(sentence_bleu(Toks{"a"}, {}), Error);
}

TEST(SentenceBleu, MultiReferenceClippingAndClosestLength) {
    // Order-1..3 matches are all covered by the union of the two references,
    // and the brevity-penalty reference length resolves the |2-3| = |4-3| tie
    // toward the shorter reference (r=2 < c=3, so BP = 1).
    const Toks hyp = {"a", "b", "c"};
    EXPECT_DOUBLE_EQ(sentence_bleu(hyp, {Toks{"a", "b"}, Toks{"a", "b", "c", "d"}}), 1.0);
}

TEST(SentenceBleu, RepeatedTokensAreClipped) {
    // "the the" vs "the cat": clipped p1 = 1/2, smoothed p2 = 1/2, BP = 1.
    EXPECT_NEAR(sentence_bleu(Toks{"the", "the"}, {Toks{"the", "cat"}}), 0.5, kTol);
}

TEST(SentenceBleu, ShortHypothesisUsesFewerOrders) {
    // |hyp| = 1 limits the geometric mean to order 1 only.
    EXPECT_DOUBLE_EQ(sentence_bleu(Toks{"cat"}, {Toks{"cat"}}), 1.0);
}

TEST(UnigramF1, BothEmptyIsOne) { EXPECT_DOUBLE_EQ(unigram_f1({}, {}), 1.0); }

TEST(UnigramF1, OneEmptyIsZero) {
    EXPECT_DOUBLE_EQ(unigram_f1({}, Toks{"a"}), 0.0);
    EXPECT_DOUBLE_EQ(unigram_f1(Toks{"a"}, {}), 0.0);
}

TEST(UnigramF1, HalfOverlap) {
    EXPECT_NEAR(unigram_f1(Toks{"a", "b"}, Toks{"a", "c"}), 0.5, kTol);
}

TEST(UnigramF1, OverlapIsClipped) {
    // hyp {a,a} vs ref {a}: overlap 1, P = 1/2, R = 1, F1 = 2/3.
    EXPECT_NEAR(unigram_f1(Toks{"a", "a"}, Toks{"a"}), 2.0 / 3.0, kTol);
}

TEST(UnigramF1, NoOverlapIsZero) {
    EXPECT_DOUBLE_EQ(unigram_f1(Toks{"a"}, Toks{"b"}), 0.0);
}

TEST(EmbeddingCosine, CanonicalAngles) {
    const std::vector<double> ex = {1.0, 0.0};
    const std::vector<double> ey = {0.0, 1.0};
    const std::vector<double> nx = {-1.0, 0.0};
    const std::vector<double> ex2 = {2.0, 0.0};
    EXPECT_NEAR(embedding_cosine(ex, ey), 0.0, kTol);
    EXPECT_NEAR(embedding_cosine(ex, ex2), 1.0, kTol);
    EXPECT_NEAR(embedding_cosine(ex, nx), -1.0, kTol);
}

TEST(EmbeddingCosine, DimensionMismatchThrows) {
    const std::vector<double> a = {1.0, 0.0};
    const std::vector<double> b = {1.0, 0.0, 0.0};
    EXPECT_THROW(embedding_cosine(a, b), Error);
}

TEST(EmbeddingCosine, ZeroNormThrows) {
    const std::vector<double> a = {0.0, 0.0};
    const std::vector<double> b = {1.0, 0.0};
    EXPECT_THROW(embedding_cosine(a, b), Error);
}

CandidateSet make_set(const std::vector<std::string>& texts) {
    CandidateSet cs;
    cs.instance_id = "t";
    for (const auto& t : texts) cs.candidates.push_back(Candidate{t, std::nullopt, {}});
    return mbrsel::validate_candidate_set(std::move(cs));
}

TEST(UtilityMatrixBuild, SentenceBleuMatchesDirectScorer) {
    const auto cs = make_set({"the cat sat", "the cat sat down"});
    UtilityKind kind;  // sentence_bleu, punct_split + lowercase
    const UtilityMatrix m = build_utility_matrix(cs, kind);
    ASSERT_EQ(m.n, 2u);
    EXPECT_DOUBLE_EQ(m(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(m(1, 1), 1.0);
    EXPECT_NEAR(m(0, 1), 0.7165313105737893, kTol);
    EXPECT_NEAR(m(1, 0), 0.6580370064762462, kTol);
    EXPECT_TRUE(m.all_positive);

    // Entries agree with the standalone scorer on the same tokenization.
    const auto t0 = mbrsel::tokenize(cs.candidates[0].text, kind.tokenizer);
    const auto t1 = mbrsel::tokenize(cs.candidates[1].text, kind.tokenizer);
    EXPECT_DOUBLE_EQ(m(0, 1), sentence_bleu(t0, {t1}));
    EXPECT_DOUBLE_EQ(m(1, 0), sentence_bleu(t1, {t0}));
}

TEST(UtilityMatrixBuild, UnigramF1IsSymmetric) {
    const auto cs = make_set({"a b", "a c", "x"});
    UtilityKind kind;
    kind.metric = UtilityMetric::unigram_f1;
    const UtilityMatrix m = build_utility_matrix(cs, kind);
    EXPECT_NEAR(m(0, 1), 0.5, kTol);
    EXPECT_DOUBLE_EQ(m(0, 1), m(1, 0));
    EXPECT_DOUBLE_EQ(m(0, 2), 0.0);
    EXPECT_DOUBLE_EQ(m(2, 2), 1.0);
    EXPECT_FALSE(m.all_positive);
}

TEST(UtilityMatrixBuild, CosineIsRescaledToUnitInterval) {
    CandidateSet cs;
    cs.instance_id = "t";
    cs.candidates.push_back(Candidate{"a", std::nullopt, {1.0, 0.0}});
    cs.candidates.push_back(Candidate{"b", std::nullopt, {0.0, 1.0}});
    cs.candidates.push_back(Candidate{"c", std::nullopt, {-2.0, 0.0}});
    cs = mbrsel::validate_candidate_set(std::move(cs));
    UtilityKind kind;
    kind.metric = UtilityMetric::embedding_cosine;
    const UtilityMatrix m = build_utility_matrix(cs, kind);
    // (cos + 1) / 2: identical 1, orthogonal 0.5, antiparallel 0.
    EXPECT_DOUBLE_EQ(m(0, 0), 1.0);
    EXPECT_NEAR(m(0, 1), 0.5, kTol);
    EXPECT_NEAR(m(0, 2), 0.0, kTol);
    EXPECT_DOUBLE_EQ(m(0, 2), m(2, 0));
    EXPECT_FALSE(m.all_positive);
}

TEST(UtilityMatrixBuild, CosineMissingEmbeddingNamesIndex) {
    CandidateSet cs;
    cs.instance_id = "t";
    cs.candidates.push_back(Candidate{"a", std::nullopt, {1.0, 0.0}});
    cs.candidates.push_back(Candidate{"b", std::nullopt, {}});
    cs = mbrsel::validate_candidate_set(std::move(cs));
    UtilityKind kind;
    kind.metric = UtilityMetric::embedding_cosine;
    try {
        build_utility_matrix(cs, kind);
        FAIL() << "expected Error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
    }
}

TEST(UtilityMatrixBuild, PrecomputedPassthrough) {
    const auto cs = make_set({"a", "b"});
    const UtilityMatrix src = testutil::make_matrix({{1.0, 0.25}, {0.5, 1.0}});
    UtilityKind kind;
    kind.metric = UtilityMetric::precomputed;
    const UtilityMatrix m = build_utility_matrix(cs, kind, &src);
    EXPECT_EQ(m.values, src.values);
    EXPECT_TRUE(m.all_positive);
}

TEST(UtilityMatrixBuild, PrecomputedMissingOrWrongSizeThrows) {
    const auto cs = make_set({"a", "b"});
    UtilityKind kind;
    kind.metric = UtilityMetric::precomputed;
    EXPECT_THROW(build_utility_matrix(cs, kind, nullptr), Error);
    const UtilityMatrix wrong = testutil::make_matrix({{1.0}});
    EXPECT_THROW(build_utility_matrix(cs, kind, &wrong), Error);
}

TEST(UtilityMatrixBuild, WhitespaceTokenizerChangesScores) {
    // With punctuation splitting, "cat." and "cat !" share the token "cat";
    // in whitespace mode they do not.
    const auto cs = make_set({"the cat.", "the cat !"});
    UtilityKind punct;
    const UtilityMatrix mp = build_utility_matrix(cs, punct);
    UtilityKind ws;
    ws.tokenizer.mode = mbrsel::TokenizerMode::whitespace;
    const UtilityMatrix mw = build_utility_matrix(cs, ws);
    EXPECT_GT(mp(0, 1), 0.0);
    EXPECT_LT(mw(0, 1), mp(0, 1));
}

}  // namespace
