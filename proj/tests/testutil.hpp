#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "mbrsel/core.hpp"
#include "mbrsel/rng.hpp"

namespace testutil {

inline mbrsel::UtilityMatrix make_matrix(const std::vector<std::vector<double>>& rows) {
    mbrsel::UtilityMatrix m;
    m.n = rows.size();
    for (const auto& row : rows)
        for (double v : row) m.values.push_back(v);
    return mbrsel::validate_utility_matrix(std::move(m), rows.size());
}

// Entries uniform in (0,1], drawn row-major.
inline mbrsel::UtilityMatrix random_matrix(mbrsel::SplitMix64& rng, std::size_t n) {
    mbrsel::UtilityMatrix m;
    m.n = n;
    m.values.resize(n * n);
    for (std::size_t i = 0; i < n * n; ++i) m.values[i] = 1.0 - rng.next_double();
    return mbrsel::validate_utility_matrix(std::move(m), n);
}

// Symmetric entries uniform in (0,1], drawn for i <= j and mirrored.
inline mbrsel::UtilityMatrix random_symmetric_matrix(mbrsel::SplitMix64& rng, std::size_t n) {
    mbrsel::UtilityMatrix m;
    m.n = n;
    m.values.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = 1.0 - rng.next_double();
            m.values[i * n + j] = v;
            m.values[j * n + i] = v;
        }
    }
    return mbrsel::validate_utility_matrix(std::move(m), n);
}

// V(i, j) = U(perm[i], perm[j]): the pool relabeled so new index i is old
// index perm[i].
inline mbrsel::UtilityMatrix permute_matrix(const mbrsel::UtilityMatrix& u,
                                            const std::vector<std::size_t>& perm) {
    mbrsel::UtilityMatrix v;
    v.n = u.n;
    v.values.resize(u.n * u.n);
    for (std::size_t i = 0; i < u.n; ++i)
        for (std::size_t j = 0; j < u.n; ++j) v.values[i * u.n + j] = u(perm[i], perm[j]);
    return mbrsel::validate_utility_matrix(std::move(v), u.n);
}

inline std::vector<std::size_t> sorted_copy(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v;
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
            i = j + 1;
        }
        return r;
    };
    const std::vector<double> rx = ranks(x);
    const std::vector<double> ry = ranks(y);
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    return num / std::sqrt(dx * dy);
}

class TempFile {
public:
    TempFile(const std::string& name, const std::string& content) {
        path_ = (std::filesystem::temp_directory_path() /
                 ("mbrsel_test_" + std::to_string(counter_++) + "_" + name))
                    .string();
        std::ofstream out(path_, std::ios::binary);
        out << content;
    }
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
    const std::string& path() const { return path_; }

private:
    static inline int counter_ = 0;
    std::string path_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace testutil
