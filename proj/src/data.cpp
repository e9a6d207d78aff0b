#include "fzsl/data.hpp"

#include "fzsl/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

namespace fzsl {

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    for (auto& c : cells) {
        while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
        while (!c.empty() && c.front() == ' ') c.erase(c.begin());
    }
    return cells;
}

std::optional<double> parse_double(const std::string& text) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || first == last) return std::nullopt;
    return value;
}

std::string json_id(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw FormatError("split manifest ids must be strings or integers, got " + v.dump());
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw FormatError("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw FormatError("cannot write " + path.string());
    return out;
}

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u32_le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::string format_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

// ---- ClassCatalog -----------------------------------------------------------

ClassCatalog::ClassCatalog(std::vector<std::string> class_ids, Matrix attributes,
                           std::vector<Index> seen, std::vector<Index> unseen,
                           std::vector<std::vector<Index>> folds)
    : class_ids_(std::move(class_ids)),
      attributes_(std::move(attributes)),
      seen_(std::move(seen)),
      unseen_(std::move(unseen)),
      folds_(std::move(folds)) {
    const Index classes = attributes_.rows();
    require(classes > 0, "catalog needs at least one class");
    require(attributes_.cols() >= 1, "catalog needs at least one attribute");
    require(static_cast<Index>(class_ids_.size()) == classes,
            "catalog has " + std::to_string(class_ids_.size()) + " ids for " +
                std::to_string(classes) + " attribute rows");
    require(attributes_.allFinite(), "catalog attributes must be finite");

    seen_mask_.assign(static_cast<std::size_t>(classes), false);
    seen_pos_.assign(static_cast<std::size_t>(classes), -1);
    std::vector<int> covered(static_cast<std::size_t>(classes), 0);
    for (std::size_t i = 0; i < seen_.size(); ++i) {
        const Index c = seen_[i];
        require(c >= 0 && c < classes, "seen class index out of range");
        require(covered[c]++ == 0, "class " + class_ids_[c] + " listed twice in split");
        seen_mask_[c] = true;
        seen_pos_[c] = static_cast<Index>(i);
    }
    for (const Index c : unseen_) {
        require(c >= 0 && c < classes, "unseen class index out of range");
        require(covered[c]++ == 0, "class " + class_ids_[c] + " is both seen and unseen");
    }
    for (Index c = 0; c < classes; ++c)
        require(covered[c] == 1, "class " + class_ids_[c] + " is in neither seen nor unseen");

    if (!folds_.empty()) {
        std::vector<int> in_fold(static_cast<std::size_t>(classes), 0);
        for (const auto& fold : folds_)
            for (const Index c : fold) {
                require(c >= 0 && c < classes && seen_mask_[c], "fold member must be a seen class");
                require(in_fold[c]++ == 0, "class " + class_ids_[c] + " appears in two folds");
            }
        for (const Index c : seen_)
            require(in_fold[c] == 1, "folds must cover seen class " + class_ids_[c]);
    }
}

std::optional<Index> ClassCatalog::find(const std::string& class_id) const {
    const auto it = std::find(class_ids_.begin(), class_ids_.end(), class_id);
    if (it == class_ids_.end()) return std::nullopt;
    return static_cast<Index>(it - class_ids_.begin());
}

Matrix ClassCatalog::rows(const std::vector<Index>& classes) const {
    Matrix out(static_cast<Index>(classes.size()), attributes_.cols());
    for (std::size_t i = 0; i < classes.size(); ++i)
        out.row(static_cast<Index>(i)) = attributes_.row(classes[i]);
    return out;
}

ClassCatalog ClassCatalog::normalized() const {
    Matrix a = attributes_;
    for (Index r = 0; r < a.rows(); ++r) {
        const double norm = a.row(r).norm();
        if (norm > 0.0) a.row(r) /= norm;
    }
    return ClassCatalog(class_ids_, std::move(a), seen_, unseen_, folds_);
}

// ---- SampleSet --------------------------------------------------------------

const char* to_string(SampleRole role) {
    switch (role) {
        case SampleRole::train: return "train";
        case SampleRole::val: return "val";
        case SampleRole::test_seen: return "test_seen";
        case SampleRole::test_unseen: return "test_unseen";
    }
    return "?";
}

void SampleSet::validate(const ClassCatalog& catalog) const {
    require(features.size() == labels.size(), "sample set has mismatched feature/label counts");
    require(sample_ids.empty() || sample_ids.size() == features.size(),
            "sample set has mismatched id count");
    for (std::size_t i = 0; i < features.size(); ++i) {
        require(features[i].rows() == regions() && features[i].cols() == feature_dim(),
                "sample " + std::to_string(i) + " has a different region grid");
        require(labels[i] >= 0 && labels[i] < catalog.num_classes(),
                "sample " + std::to_string(i) + " label out of range");
        if (role == SampleRole::train)
            require(catalog.is_seen(labels[i]),
                    "train sample " + std::to_string(i) + " labelled with unseen class " +
                        catalog.class_ids()[labels[i]]);
    }
}

SampleSet SampleSet::filter(const ClassCatalog& catalog, bool keep_seen, SampleRole new_role) const {
    SampleSet out;
    out.role = new_role;
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (catalog.is_seen(labels[i]) != keep_seen) continue;
        if (!sample_ids.empty()) out.sample_ids.push_back(sample_ids[i]);
        out.features.push_back(features[i]);
        out.labels.push_back(labels[i]);
    }
    return out;
}

// ---- toy generator ------------------------------------------------------------

void ToyConfig::validate() const {
    if (!(variance > 0.0) || !std::isfinite(variance))
        throw ConfigError("toy variance must be positive");
    if (seen_centers.empty() || unseen_centers.empty())
        throw ConfigError("toy config needs at least one seen and one unseen center");
    if (samples_per_class <= 0) throw ConfigError("toy samples_per_class must be positive");
}

ToyData generate_toy(const ToyConfig& cfg) {
    cfg.validate();
    const auto n_seen = static_cast<Index>(cfg.seen_centers.size());
    const auto n_classes = n_seen + static_cast<Index>(cfg.unseen_centers.size());

    Matrix attributes(n_classes, 2);
    std::vector<std::string> ids;
    std::vector<Index> seen, unseen;
    for (Index c = 0; c < n_classes; ++c) {
        const auto& center = c < n_seen ? cfg.seen_centers[c] : cfg.unseen_centers[c - n_seen];
        attributes(c, 0) = center[0];
        attributes(c, 1) = center[1];
        ids.push_back(std::to_string(c));
        (c < n_seen ? seen : unseen).push_back(c);
    }
    ToyData data{ClassCatalog(std::move(ids), attributes, seen, unseen), {}, {}};
    data.train.role = SampleRole::train;
    data.test.role = SampleRole::test_seen;

    const double stddev = std::sqrt(cfg.variance);
    auto draw = [&](Rng& rng, SampleSet& set, Index cls, const std::string& prefix) {
        for (int i = 0; i < cfg.samples_per_class; ++i) {
            Matrix x(1, 2);
            x(0, 0) = attributes(cls, 0) + stddev * rng.normal();
            x(0, 1) = attributes(cls, 1) + stddev * rng.normal();
            set.sample_ids.push_back(prefix + std::to_string(cls) + "_" + std::to_string(i));
            set.features.push_back(std::move(x));
            set.labels.push_back(cls);
        }
    };
    Rng train_rng = Rng(cfg.seed).fork("toy/train");
    Rng test_rng = Rng(cfg.seed).fork("toy/test");
    for (const Index c : seen) draw(train_rng, data.train, c, "train_");
    for (Index c = 0; c < n_classes; ++c) draw(test_rng, data.test, c, "test_");
    return data;
}

// ---- attribute CSV + split manifest ----------------------------------------------

ClassCatalog load_attributes(const std::filesystem::path& csv_path,
                             const std::filesystem::path& split_path) {
    auto in = open_in(csv_path);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw FormatError(where(csv_path, 1) + ": empty attribute file");
    ++line_no;
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "class_id")
        throw FormatError(where(csv_path, 1) + ": header must be class_id,a_0,...");
    const std::size_t n = header.size() - 1;

    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != n + 1)
            throw FormatError(where(csv_path, line_no) + ": expected " + std::to_string(n + 1) +
                              " cells, found " + std::to_string(cells.size()));
        std::vector<double> row;
        for (std::size_t j = 1; j < cells.size(); ++j) {
            const auto v = parse_double(cells[j]);
            if (!v || !std::isfinite(*v))
                throw FormatError(where(csv_path, line_no) + ": non-numeric cell '" + cells[j] + "'");
            row.push_back(*v);
        }
        ids.push_back(cells[0]);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError(where(csv_path, line_no) + ": no class rows");

    Matrix attributes(static_cast<Index>(rows.size()), static_cast<Index>(n));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t j = 0; j < n; ++j)
            attributes(static_cast<Index>(r), static_cast<Index>(j)) = rows[r][j];

    nlohmann::json split;
    try {
        auto split_in = open_in(split_path);
        split = nlohmann::json::parse(split_in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(split_path.string() + ": " + e.what());
    }
    auto resolve = [&](const nlohmann::json& list, const char* key) {
        std::vector<Index> out;
        if (!list.is_array()) throw FormatError(split_path.string() + ": '" + key + "' must be a list");
        for (const auto& v : list) {
            const std::string id = json_id(v);
            const auto it = std::find(ids.begin(), ids.end(), id);
            if (it == ids.end())
                throw FormatError(split_path.string() + ": '" + key + "' references unknown class \"" +
                                  id + "\"");
            out.push_back(static_cast<Index>(it - ids.begin()));
        }
        return out;
    };
    if (!split.is_object() || !split.contains("seen") || !split.contains("unseen"))
        throw FormatError(split_path.string() + ": manifest needs 'seen' and 'unseen'");
    auto seen = resolve(split["seen"], "seen");
    auto unseen = resolve(split["unseen"], "unseen");
    std::vector<std::vector<Index>> folds;
    if (split.contains("folds"))
        for (const auto& f : split["folds"]) folds.push_back(resolve(f, "folds"));
    try {
        return ClassCatalog(std::move(ids), std::move(attributes), std::move(seen),
                            std::move(unseen), std::move(folds));
    } catch (const ContractError& e) {
        throw FormatError(split_path.string() + ": " + e.what());
    }
}

void save_attributes(const ClassCatalog& catalog, const std::filesystem::path& csv_path,
                     const std::filesystem::path& split_path) {
    auto out = open_out(csv_path);
    out << "class_id";
    for (Index j = 0; j < catalog.num_attributes(); ++j) out << ",a_" << j;
    out << "\n";
    for (Index c = 0; c < catalog.num_classes(); ++c) {
        out << catalog.class_ids()[c];
        for (Index j = 0; j < catalog.num_attributes(); ++j)
            out << "," << format_real(catalog.attributes()(c, j));
        out << "\n";
    }
    auto ids_of = [&](const std::vector<Index>& classes) {
        nlohmann::json list = nlohmann::json::array();
        for (const Index c : classes) list.push_back(catalog.class_ids()[c]);
        return list;
    };
    nlohmann::json split{{"seen", ids_of(catalog.seen())}, {"unseen", ids_of(catalog.unseen())}};
    if (!catalog.folds().empty()) {
        split["folds"] = nlohmann::json::array();
        for (const auto& f : catalog.folds()) split["folds"].push_back(ids_of(f));
    }
    open_out(split_path) << split.dump(2) << "\n";
}

// ---- binary feature tensors ----------------------------------------------------------

FeatureTensor read_feature_tensor(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    constexpr std::size_t header_size = 4 + 4 * 4;
    if (bytes.size() < header_size) throw FormatError(path.string() + ": truncated header");
    if (bytes.compare(0, 4, "ZSLF") != 0) throw FormatError(path.string() + ": bad magic");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t version = read_u32_le(p + 4);
    const std::uint32_t count = read_u32_le(p + 8);
    const std::uint32_t regions = read_u32_le(p + 12);
    const std::uint32_t dim = read_u32_le(p + 16);
    if (version != 1) throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
    if (regions == 0 || dim == 0) throw FormatError(path.string() + ": zero region grid");
    const std::uint64_t per_sample = std::uint64_t{regions} * dim;
    if (per_sample > std::numeric_limits<std::uint32_t>::max())
        throw FormatError(path.string() + ": R*f overflows");
    const std::uint64_t payload = std::uint64_t{count} * per_sample * 4;
    if (bytes.size() - header_size < payload)
        throw FormatError(path.string() + ": truncated payload (expected " + std::to_string(payload) +
                          " bytes, found " + std::to_string(bytes.size() - header_size) + ")");
    if (bytes.size() - header_size > payload)
        throw FormatError(path.string() + ": trailing bytes after payload");

    FeatureTensor out{regions, dim, {}};
    out.samples.reserve(count);
    const unsigned char* cursor = p + header_size;
    for (std::uint32_t s = 0; s < count; ++s) {
        Matrix m(regions, dim);
        for (std::uint32_t r = 0; r < regions; ++r)
            for (std::uint32_t c = 0; c < dim; ++c) {
                m(r, c) = static_cast<double>(std::bit_cast<float>(read_u32_le(cursor)));
                cursor += 4;
            }
        out.samples.push_back(std::move(m));
    }
    return out;
}

void write_feature_tensor(const std::filesystem::path& path, const std::vector<Matrix>& samples) {
    const Index regions = samples.empty() ? 1 : samples.front().rows();
    const Index dim = samples.empty() ? 1 : samples.front().cols();
    std::string bytes = "ZSLF";
    put_u32_le(bytes, 1);
    put_u32_le(bytes, static_cast<std::uint32_t>(samples.size()));
    put_u32_le(bytes, static_cast<std::uint32_t>(regions));
    put_u32_le(bytes, static_cast<std::uint32_t>(dim));
    bytes.reserve(bytes.size() + samples.size() * static_cast<std::size_t>(regions * dim) * 4);
    for (const auto& m : samples) {
        require(m.rows() == regions && m.cols() == dim, "feature samples must share one grid");
        for (Index r = 0; r < regions; ++r)
            for (Index c = 0; c < dim; ++c)
                put_u32_le(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(m(r, c))));
    }
    open_out(path, std::ios::binary) << bytes;
}

SampleSet load_features(const std::filesystem::path& features_path,
                        const std::filesystem::path& labels_path, const ClassCatalog& catalog,
                        SampleRole role) {
    FeatureTensor tensor = read_feature_tensor(features_path);
    SampleSet set;
    set.role = role;
    auto in = open_in(labels_path);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"sample_id", "class_id"})
        throw FormatError(where(labels_path, 1) + ": header must be sample_id,class_id");
    ++line_no;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 2) throw FormatError(where(labels_path, line_no) + ": expected 2 cells");
        const auto cls = catalog.find(cells[1]);
        if (!cls) throw FormatError(where(labels_path, line_no) + ": unknown class \"" + cells[1] + "\"");
        set.sample_ids.push_back(cells[0]);
        set.labels.push_back(*cls);
    }
    if (set.labels.size() != tensor.samples.size())
        throw FormatError(labels_path.string() + ": " + std::to_string(set.labels.size()) +
                          " labels for " + std::to_string(tensor.samples.size()) + " feature samples");
    set.features = std::move(tensor.samples);
    try {
        set.validate(catalog);
    } catch (const ContractError& e) {
        throw FormatError(labels_path.string() + ": " + e.what());
    }
    return set;
}

void save_features(const SampleSet& set, const ClassCatalog& catalog,
                   const std::filesystem::path& features_path,
                   const std::filesystem::path& labels_path) {
    write_feature_tensor(features_path, set.features);
    auto out = open_out(labels_path);
    out << "sample_id,class_id\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        const std::string id = set.sample_ids.empty() ? std::to_string(i) : set.sample_ids[i];
        out << id << "," << catalog.class_ids()[set.labels[i]] << "\n";
    }
}

}  // namespace fzsl
