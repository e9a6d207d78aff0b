#ifndef FZSL_GRADCHECK_HPP
#define FZSL_GRADCHECK_HPP

#include "fzsl/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace fzsl {

struct GradCheckInstance {
    std::string kind;  // "head" or "shallow"
    int index = 0;
    GradCheckReport report;
};

/// Small random head and shallow problems with soft targets, each checked by
/// central differences. Instance k of each kind uses its own forked stream.
std::vector<GradCheckInstance> gradcheck_suite(std::uint64_t seed, int head_instances, int shallow_instances,
                                               double tolerance = 1e-5, double step = 1e-6);

GradCheckReport gradcheck_head_instance(std::uint64_t seed, double tolerance, double step = 1e-6);
GradCheckReport gradcheck_shallow_instance(std::uint64_t seed, double tolerance, double step = 1e-6);

nlohmann::json to_json(const std::vector<GradCheckInstance>& results);

}  // namespace fzsl

#endif  // FZSL_GRADCHECK_HPP
