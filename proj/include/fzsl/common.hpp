#ifndef FZSL_COMMON_HPP
#define FZSL_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fzsl {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

// Working precision for data, training and persisted state.
using Real = double;
using Matrix = MatrixX<Real>;
using Vector = VectorX<Real>;

// Binary attribute mask; 1 keeps the attribute, 0 drops it.
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

// Error taxonomy. The CLI maps ConfigError/ContractError/FormatError to exit
// code 2 and NumericError to exit code 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ContractError(message);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.allFinite();
}

// Lowest index wins on ties.
template <typename Derived>
Index argmax(const Eigen::DenseBase<Derived>& v) {
    Index best = 0;
    for (Index i = 1; i < v.size(); ++i)
        if (v(i) > v(best)) best = i;
    return best;
}

}  // namespace fzsl

#endif  // FZSL_COMMON_HPP
