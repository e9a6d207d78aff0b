#include "fzsl/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <string>

namespace fzsl {

namespace {

template <typename Blocks>
void append_blocks(nlohmann::json& shapes, std::string& payload, const Blocks& blocks) {
    for (const auto& b : blocks) {
        shapes.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
        for (const double v : b.values) {
            const auto bits = std::bit_cast<std::uint64_t>(v);
            for (int i = 0; i < 8; ++i) payload.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
        }
    }
}

void write_file(const std::filesystem::path& path, nlohmann::json header, const CheckpointMeta& meta,
                const std::string& payload) {
    header["format"] = "fzsl-checkpoint";
    header["version"] = 1;
    header["seed"] = meta.seed;
    header["step"] = meta.step;
    header["gamma"] = meta.gamma ? nlohmann::json(*meta.gamma) : nlohmann::json(nullptr);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << header.dump() << "\n" << payload;
}

class PayloadReader {
public:
    PayloadReader(const std::string& bytes, std::size_t offset, std::filesystem::path path)
        : bytes_(bytes), pos_(offset), path_(std::move(path)) {}

    template <typename Derived>
    void fill(const nlohmann::json& shape, Eigen::PlainObjectBase<Derived>& m) {
        const auto rows = shape.at("rows").get<Index>();
        const auto cols = shape.at("cols").get<Index>();
        if (rows < 0 || cols < 0) throw FormatError(path_.string() + ": negative block shape");
        m.resize(rows, cols);
        for (Index i = 0; i < m.size(); ++i) {
            if (pos_ + 8 > bytes_.size()) throw FormatError(path_.string() + ": truncated payload");
            std::uint64_t bits = 0;
            for (int k = 0; k < 8; ++k)
                bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
            m.data()[i] = std::bit_cast<double>(bits);
            pos_ += 8;
        }
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::size_t pos_;
    std::filesystem::path path_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const HeadModel& model, const CheckpointMeta& meta) {
    const HeadDims d = model.head.dims();
    nlohmann::json header{{"kind", "head"},
                          {"dims", {{"attributes", d.attributes}, {"feature_dim", d.feature_dim}, {"embed_dim", d.embed_dim}}},
                          {"trunk", model.trunk.trainable() ? "tanh" : "identity"},
                          {"blocks", nlohmann::json::array()}};
    std::string payload;
    append_blocks(header["blocks"], payload, model.head.blocks());
    if (model.trunk.trainable()) append_blocks(header["blocks"], payload, model.trunk.blocks());
    write_file(path, std::move(header), meta, payload);
}

void save_checkpoint(const std::filesystem::path& path, const ShallowModel& model, const CheckpointMeta& meta) {
    const auto& p = model.params;
    nlohmann::json header{{"kind", "shallow"},
                          {"dims", {{"input", p.input_dim()}, {"hidden", p.hidden_dim()}, {"output", p.output_dim()}}},
                          {"blocks", nlohmann::json::array()}};
    std::string payload;
    append_blocks(header["blocks"], payload, p.blocks());
    write_file(path, std::move(header), meta, payload);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto newline = bytes.find('\n');
    if (newline == std::string::npos) throw FormatError(path.string() + ": missing checkpoint header");
    Checkpoint ck;
    try {
        ck.header = nlohmann::json::parse(bytes.substr(0, newline));
        if (ck.header.at("format") != "fzsl-checkpoint" || ck.header.at("version") != 1)
            throw FormatError(path.string() + ": not a version-1 checkpoint");
        ck.meta.seed = ck.header.at("seed").get<std::uint64_t>();
        ck.meta.step = ck.header.at("step").get<long>();
        if (!ck.header.at("gamma").is_null()) ck.meta.gamma = ck.header["gamma"].get<double>();

        PayloadReader reader(bytes, newline + 1, path);
        const auto& blocks = ck.header.at("blocks");
        const std::string kind = ck.header.at("kind").get<std::string>();
        if (kind == "head") {
            HeadModel m;
            if (blocks.size() < 4) throw FormatError(path.string() + ": head checkpoint needs 4 blocks");
            reader.fill(blocks[0], m.head.V);
            reader.fill(blocks[1], m.head.W_alpha);
            reader.fill(blocks[2], m.head.W_beta);
            reader.fill(blocks[3], m.head.W_e);
            if (ck.header.at("trunk") == "tanh") {
                if (blocks.size() != 6) throw FormatError(path.string() + ": tanh trunk needs 2 more blocks");
                m.trunk.kind = FeatureStage<Real>::Kind::tanh;
                reader.fill(blocks[4], m.trunk.W);
                reader.fill(blocks[5], m.trunk.b);
            }
            m.head.validate();
            ck.head = std::move(m);
        } else if (kind == "shallow") {
            ShallowModel m;
            if (blocks.size() != 4) throw FormatError(path.string() + ": shallow checkpoint needs 4 blocks");
            reader.fill(blocks[0], m.params.W1);
            reader.fill(blocks[1], m.params.b1);
            reader.fill(blocks[2], m.params.W2);
            reader.fill(blocks[3], m.params.b2);
            m.params.validate();
            ck.shallow = std::move(m);
        } else {
            throw FormatError(path.string() + ": unknown checkpoint kind " + kind);
        }
        if (!reader.done()) throw FormatError(path.string() + ": trailing bytes after payload");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    } catch (const ContractError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return ck;
}

}  // namespace fzsl
