#include "fzsl/augment.hpp"

#include <array>
#include <cmath>
#include <fstream>

namespace fzsl {

namespace {
constexpr std::array<std::pair<Strategy, const char*>, 9> kStrategyNames{{
    {Strategy::none, "none"},
    {Strategy::fictitious_dropout, "fictitious_dropout"},
    {Strategy::manifold_mixup, "manifold_mixup"},
    {Strategy::mixup_add, "mixup_add"},
    {Strategy::mixup_fictitious, "mixup_fictitious"},
    {Strategy::features_cutmix, "features_cutmix"},
    {Strategy::features_cutmix_add, "features_cutmix_add"},
    {Strategy::cutmix_fictitious, "cutmix_fictitious"},
    {Strategy::dropout, "dropout"},
}};
}  // namespace

Strategy parse_strategy(std::string_view name) {
    for (const auto& [s, n] : kStrategyNames)
        if (name == n) return s;
    throw ConfigError("unknown augmentation strategy '" + std::string(name) + "'");
}

const char* to_string(Strategy s) {
    for (const auto& [v, n] : kStrategyNames)
        if (v == s) return n;
    return "?";
}

void AugmentConfig::validate() const {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("augment.p must lie in (0, 1)");
    if (m < 0) throw ConfigError("augment.m must be non-negative");
    if (!(mix_alpha > 0.0) || !std::isfinite(mix_alpha)) throw ConfigError("augment.mix_alpha must be positive");
}

void write_mask_audit(const std::filesystem::path& path, const std::vector<std::string>& source_ids,
                      const std::vector<Mask>& masks) {
    require(source_ids.size() == masks.size(), "write_mask_audit: one id per mask");
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "sample_id,mask_bits\n";
    for (std::size_t i = 0; i < masks.size(); ++i) {
        out << source_ids[i] << ",";
        for (Index j = 0; j < masks[i].size(); ++j) out << (masks[i](j) ? '1' : '0');
        out << "\n";
    }
}

}  // namespace fzsl
