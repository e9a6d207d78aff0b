// Hand-rolled generators and scratch-directory helpers shared by the suites.
#ifndef FZSL_TESTS_SUPPORT_HPP
#define FZSL_TESTS_SUPPORT_HPP

#include "fzsl/common.hpp"
#include "fzsl/rng.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace fzsl::testing {

inline Matrix random_matrix(Rng& rng, Index rows, Index cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = scale * rng.normal();
    return m;
}

inline Vector random_vector(Rng& rng, Index n, double scale = 1.0) { return random_matrix(rng, n, 1, scale).col(0); }

inline Index random_int(Rng& rng, Index lo, Index hi) {
    return lo + static_cast<Index>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

inline std::vector<Matrix> random_batch(Rng& rng, std::size_t count, Index rows, Index cols) {
    std::vector<Matrix> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(random_matrix(rng, rows, cols));
    return out;
}

inline std::vector<Index> random_labels(Rng& rng, std::size_t count, Index classes) {
    std::vector<Index> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(random_int(rng, 0, classes - 1));
    return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
struct ScratchDir {
    std::filesystem::path path;
    explicit ScratchDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("fzsl_" + tag + "_" + std::to_string(Rng::mix(
                   static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)), tag)));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

}  // namespace fzsl::testing

#endif  // FZSL_TESTS_SUPPORT_HPP
