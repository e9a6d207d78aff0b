#ifndef FZSL_CHECKPOINT_HPP
#define FZSL_CHECKPOINT_HPP

#include "fzsl/train.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>

namespace fzsl {

struct CheckpointMeta {
    std::uint64_t seed = 0;
    long step = 0;
    std::optional<double> gamma;
};

// One line of JSON header (kind, dims, seed, step, block shapes), then each
// block as little-endian f64 in column-major order, blocks in declaration order.
void save_checkpoint(const std::filesystem::path& path, const HeadModel& model, const CheckpointMeta& meta);
void save_checkpoint(const std::filesystem::path& path, const ShallowModel& model, const CheckpointMeta& meta);

struct Checkpoint {
    nlohmann::json header;
    CheckpointMeta meta;
    std::optional<HeadModel> head;
    std::optional<ShallowModel> shallow;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fzsl

#endif  // FZSL_CHECKPOINT_HPP
