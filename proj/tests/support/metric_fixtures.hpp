// SPDX-License-Identifier: Apache-2.0
// Hand-computed metric values. Each expected value is written as the
// arithmetic it came from.
#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace efpc::testing {

struct PairFixture {
    std::string a;
    std::string b;
    double expected;
};

struct PrfFixture {
    std::string candidate;
    std::string reference;
    double precision;
    double recall;
    double f1;
};

struct BleuFixture {
    std::string candidate;
    std::vector<std::string> references;
    std::size_t max_n;
    double expected;
};

inline double f1_of(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

inline const std::vector<PairFixture>& token_f1_fixtures() {
    static const std::vector<PairFixture> f = {
        {"cat", "cat", 1.0},
        {"the cat", "cat", f1_of(1.0 / 2, 1.0)},
        {"", "cat", 0.0},
        {"", "", 1.0},
        {"cat", "", 0.0},
        {"The Cat", "the cat", 1.0},
        {"a b c d", "a b", f1_of(2.0 / 4, 2.0 / 2)},
        {"a a b", "a b b", f1_of(2.0 / 3, 2.0 / 3)},  // one a, one b shared
        {"x y", "a b", 0.0},
        {"new york city", "york new", f1_of(2.0 / 3, 2.0 / 2)},
        {"cat.", "cat", 0.0},  // punctuation is part of the token
        {"a b c", "c d e f", f1_of(1.0 / 3, 1.0 / 4)},
    };
    return f;
}

inline const std::vector<PrfFixture>& rouge1_fixtures() {
    static const std::vector<PrfFixture> f = {
        {"the cat sat", "the cat", 2.0 / 3, 1.0, f1_of(2.0 / 3, 1.0)},
        {"a b c", "a b c", 1.0, 1.0, 1.0},
        {"a a a", "a", 1.0 / 3, 1.0, f1_of(1.0 / 3, 1.0)},
        {"x y", "a b", 0.0, 0.0, 0.0},
        {"", "a", 0.0, 0.0, 0.0},
        {"The Cat", "the cat", 1.0, 1.0, 1.0},
        {"a b c d e", "a c e", 3.0 / 5, 1.0, f1_of(3.0 / 5, 1.0)},
        {"a b", "a b c d", 1.0, 2.0 / 4, f1_of(1.0, 2.0 / 4)},
        {"a b b c", "b b b d", 2.0 / 4, 2.0 / 4, 2.0 / 4},
        {"the cat sat on the mat", "the dog sat on the log", 4.0 / 6, 4.0 / 6, 4.0 / 6},
        {"a", "", 0.0, 0.0, 0.0},
    };
    return f;
}

inline const std::vector<PrfFixture>& rouge2_fixtures() {
    static const std::vector<PrfFixture> f = {
        {"the cat sat", "the cat", 1.0 / 2, 1.0, f1_of(1.0 / 2, 1.0)},
        {"a b c", "a b c", 1.0, 1.0, 1.0},
        {"a", "a", 0.0, 0.0, 0.0},  // no bigrams on either side
        {"a b a b", "a b", 1.0 / 3, 1.0, f1_of(1.0 / 3, 1.0)},
        {"a b c d", "b c d e", 2.0 / 3, 2.0 / 3, 2.0 / 3},
        {"a b c d e", "a c e", 0.0, 0.0, 0.0},
        {"the cat sat on the mat", "the dog sat on the log", 2.0 / 5, 2.0 / 5, f1_of(2.0 / 5, 2.0 / 5)},
        {"The Cat sat", "the cat", 1.0 / 2, 1.0, f1_of(1.0 / 2, 1.0)},
        {"a a a", "a a", 1.0 / 2, 1.0, f1_of(1.0 / 2, 1.0)},
        {"x y z", "z y x", 0.0, 0.0, 0.0},
        {"a b c", "a b c d", 1.0, 2.0 / 3, f1_of(1.0, 2.0 / 3)},
    };
    return f;
}

inline const std::vector<PrfFixture>& rouge_l_fixtures() {
    static const std::vector<PrfFixture> f = {
        {"a b c d", "a c d", 3.0 / 4, 1.0, 6.0 / 7},
        {"a b c", "a b c", 1.0, 1.0, 1.0},
        {"a b", "c d", 0.0, 0.0, 0.0},
        {"", "", 1.0, 1.0, 1.0},
        {"a", "", 0.0, 0.0, 0.0},
        {"a b c", "c b a", 1.0 / 3, 1.0 / 3, 1.0 / 3},
        {"a b c d e f", "a c e", 3.0 / 6, 1.0, f1_of(3.0 / 6, 1.0)},
        {"x a y b z", "a b", 2.0 / 5, 1.0, 4.0 / 7},
        {"a b a b", "b a b a", 3.0 / 4, 3.0 / 4, 3.0 / 4},
        {"the cat sat on the mat", "the mat", 2.0 / 6, 1.0, f1_of(2.0 / 6, 1.0)},
        {"a b", "b a", 1.0 / 2, 1.0 / 2, 1.0 / 2},
    };
    return f;
}

inline const std::vector<BleuFixture>& bleu_fixtures() {
    static const std::vector<BleuFixture> f = {
        {"the cat sat on the mat", {"the cat sat on the mat"}, 4, 1.0},
        {"", {"a"}, 4, 0.0},
        // Clipped unigram precision 1/3; the candidate is longer than the
        // reference, so there is no brevity penalty.
        {"the the the", {"the cat"}, 1, 1.0 / 3},
        {"x y z", {"a b c"}, 4, 0.0},
        // p1 = p2 = 1, c = 2, r = 6.
        {"the cat", {"the cat sat on the mat"}, 2, std::exp(1.0 - 6.0 / 2)},
        // No 4-grams: smoothed to 1 / (0 + 1).
        {"the cat sat", {"the cat sat"}, 4, 1.0},
        {"a b c d", {"a b d c"}, 2, std::sqrt(1.0 * (1.0 / 3))},
        // p3 = 1/(2+1), p4 = 1/(1+1) after smoothing.
        {"a b c d", {"a b d c"}, 4, std::pow(1.0 * (1.0 / 3) * (1.0 / 3) * (1.0 / 2), 0.25)},
        {"a b c", {"a b", "a b c d e"}, 1, 1.0},
        {"a b c", {"a b c d", "a b c d e f"}, 1, std::exp(1.0 - 4.0 / 3)},
        {"a a b", {"a b b"}, 2, std::sqrt((2.0 / 3) * (1.0 / 2))},
        // Equidistant references: the shorter length wins.
        {"a b c", {"a b", "a b c d"}, 1, 1.0},
        {"The Cat", {"the cat"}, 2, 1.0},
    };
    return f;
}

}  // namespace efpc::testing
