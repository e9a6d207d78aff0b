#ifndef FZSL_DATA_HPP
#define FZSL_DATA_HPP

#include "fzsl/common.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fzsl {

/// Attribute matrix over every class (one row a_k = phi(y_k) per class) with
/// the seen/unseen partition and optional validation folds over the seen set.
class ClassCatalog {
public:
    ClassCatalog() = default;
    ClassCatalog(std::vector<std::string> class_ids, Matrix attributes, std::vector<Index> seen,
                 std::vector<Index> unseen, std::vector<std::vector<Index>> folds = {});

    Index num_classes() const { return attributes_.rows(); }
    Index num_attributes() const { return attributes_.cols(); }
    Index num_seen() const { return static_cast<Index>(seen_.size()); }
    Index num_unseen() const { return static_cast<Index>(unseen_.size()); }

    const std::vector<std::string>& class_ids() const { return class_ids_; }
    const Matrix& attributes() const { return attributes_; }
    const std::vector<Index>& seen() const { return seen_; }
    const std::vector<Index>& unseen() const { return unseen_; }
    const std::vector<std::vector<Index>>& folds() const { return folds_; }

    bool is_seen(Index cls) const { return seen_mask_.at(static_cast<std::size_t>(cls)); }
    const std::vector<bool>& seen_mask() const { return seen_mask_; }

    /// Position of a catalog class inside seen(), or -1 for unseen classes.
    Index seen_position(Index cls) const { return seen_pos_.at(static_cast<std::size_t>(cls)); }
    std::optional<Index> find(const std::string& class_id) const;

    /// Seen attribute rows in seen() order; the fixed training classifier.
    Matrix seen_classifiers() const { return rows(seen_); }
    Matrix unseen_classifiers() const { return rows(unseen_); }
    Matrix rows(const std::vector<Index>& classes) const;

    /// Copy with every attribute row scaled to unit L2 norm (zero rows kept).
    ClassCatalog normalized() const;

private:
    std::vector<std::string> class_ids_;
    Matrix attributes_;
    std::vector<Index> seen_;
    std::vector<Index> unseen_;
    std::vector<std::vector<Index>> folds_;
    std::vector<bool> seen_mask_;
    std::vector<Index> seen_pos_;
};

enum class SampleRole { train, val, test_seen, test_unseen };

const char* to_string(SampleRole role);

/// Region-feature tensors (R x f per sample) with catalog class labels.
struct SampleSet {
    std::vector<std::string> sample_ids;
    std::vector<Matrix> features;
    std::vector<Index> labels;
    SampleRole role = SampleRole::train;

    std::size_t size() const { return features.size(); }
    bool empty() const { return features.empty(); }
    Index regions() const { return features.empty() ? 0 : features.front().rows(); }
    Index feature_dim() const { return features.empty() ? 0 : features.front().cols(); }

    /// Shape agreement, label range, and seen-only labels for train sets.
    void validate(const ClassCatalog& catalog) const;

    /// Samples whose label belongs to `keep_seen ? seen : unseen`.
    SampleSet filter(const ClassCatalog& catalog, bool keep_seen, SampleRole new_role) const;
};

struct ToyConfig {
    std::vector<std::array<double, 2>> seen_centers{{1.0, 1.0}, {-1.0, -1.0}};
    std::vector<std::array<double, 2>> unseen_centers{{-1.0, 1.0}};
    double variance = 0.1;
    int samples_per_class = 200;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ToyData {
    ClassCatalog catalog;
    SampleSet train;  // seen classes only
    SampleSet test;   // every class
};

/// Isotropic Gaussian blobs, one class per center; the class attribute vector
/// is the center itself. Samples are stored as 1 x 2 region grids.
ToyData generate_toy(const ToyConfig& cfg);

// ---- persistence -----------------------------------------------------------

/// Attribute CSV (`class_id,a_0,...`) plus split manifest JSON
/// (`{"seen":[...],"unseen":[...],"folds":[[...]]}`).
ClassCatalog load_attributes(const std::filesystem::path& csv_path,
                             const std::filesystem::path& split_path);
void save_attributes(const ClassCatalog& catalog, const std::filesystem::path& csv_path,
                     const std::filesystem::path& split_path);

/// Raw feature tensor: `ZSLF`, u32 version, count, R, f, then f32 payload.
struct FeatureTensor {
    std::uint32_t regions = 0;
    std::uint32_t dim = 0;
    std::vector<Matrix> samples;
};

FeatureTensor read_feature_tensor(const std::filesystem::path& path);
void write_feature_tensor(const std::filesystem::path& path, const std::vector<Matrix>& samples);

/// Feature file plus companion labels CSV (`sample_id,class_id`), in order.
SampleSet load_features(const std::filesystem::path& features_path,
                        const std::filesystem::path& labels_path, const ClassCatalog& catalog,
                        SampleRole role);
void save_features(const SampleSet& set, const ClassCatalog& catalog,
                   const std::filesystem::path& features_path,
                   const std::filesystem::path& labels_path);

}  // namespace fzsl

#endif  // FZSL_DATA_HPP
