#include "fzsl/evaluate.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>

namespace fzsl {

namespace {
std::string fmt_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}
}  // namespace

double harmonic_mean(double acc_u, double acc_s) {
    const double sum = acc_u + acc_s;
    return sum > 0.0 ? 2.0 * acc_u * acc_s / sum : 0.0;
}

std::vector<Index> present_classes(std::span<const Index> labels) {
    std::vector<Index> out;
    for (const Index l : labels)
        if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
    return out;
}

double per_class_accuracy(std::span<const Index> predictions, std::span<const Index> labels,
                          std::span<const Index> classes, std::map<Index, double>* per_class) {
    require(predictions.size() == labels.size(), "per_class_accuracy: one prediction per label");
    require(!classes.empty(), "per_class_accuracy: empty class subset");
    double total = 0.0;
    for (const Index c : classes) {
        std::size_t count = 0, correct = 0;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) {
                ++count;
                if (predictions[i] == c) ++correct;
            }
        require(count > 0, "per_class_accuracy: class " + std::to_string(c) + " has no samples");
        const double acc = static_cast<double>(correct) / static_cast<double>(count);
        if (per_class) (*per_class)[c] = acc;
        total += acc;
    }
    return total / static_cast<double>(classes.size());
}

std::vector<Index> predict(const Matrix& scores, const std::vector<bool>& seen_mask, double gamma) {
    std::vector<Index> out(static_cast<std::size_t>(scores.rows()));
    for (Index i = 0; i < scores.rows(); ++i)
        out[static_cast<std::size_t>(i)] = argmax(calibrated_scores<double>(scores.row(i).transpose(), seen_mask, gamma));
    return out;
}

MetricsReport evaluate_gzsl(const ScoreTable& seen_shard, const ScoreTable& unseen_shard,
                            const ClassCatalog& catalog, double gamma) {
    require(!seen_shard.labels.empty(), "evaluate_gzsl: seen shard is empty, acc_s undefined");
    require(!unseen_shard.labels.empty(), "evaluate_gzsl: unseen shard is empty, acc_u undefined");
    require(seen_shard.scores.cols() == catalog.num_classes() && unseen_shard.scores.cols() == catalog.num_classes(),
            "evaluate_gzsl: scores must cover every catalog class");
    for (const Index l : seen_shard.labels) require(catalog.is_seen(l), "evaluate_gzsl: unseen label in seen shard");
    for (const Index l : unseen_shard.labels) require(!catalog.is_seen(l), "evaluate_gzsl: seen label in unseen shard");

    MetricsReport r;
    r.gamma_used = gamma;
    std::map<Index, double> per_class;
    const auto pred_s = predict(seen_shard.scores, catalog.seen_mask(), gamma);
    const auto pred_u = predict(unseen_shard.scores, catalog.seen_mask(), gamma);
    r.acc_s = per_class_accuracy(pred_s, seen_shard.labels, present_classes(seen_shard.labels), &per_class);
    r.acc_u = per_class_accuracy(pred_u, unseen_shard.labels, present_classes(unseen_shard.labels), &per_class);
    r.hm = harmonic_mean(r.acc_u, r.acc_s);
    for (const auto& [c, acc] : per_class) r.per_class[catalog.class_ids()[c]] = acc;
    return r;
}

double evaluate_czsl(const ScoreTable& unseen_over_unseen, const ClassCatalog& catalog) {
    require(!unseen_over_unseen.labels.empty(), "evaluate_czsl: empty unseen shard");
    require(unseen_over_unseen.scores.cols() == catalog.num_unseen(),
            "evaluate_czsl: scores must cover exactly the unseen classes");
    std::vector<Index> pred;
    for (Index i = 0; i < unseen_over_unseen.scores.rows(); ++i)
        pred.push_back(catalog.unseen()[static_cast<std::size_t>(argmax(unseen_over_unseen.scores.row(i)))]);
    return per_class_accuracy(pred, unseen_over_unseen.labels, present_classes(unseen_over_unseen.labels));
}

std::vector<double> gamma_grid(const ScoreTable& seen_shard, const ScoreTable& unseen_shard,
                               const ClassCatalog& catalog, const GridSpec& spec) {
    std::vector<double> grid;
    if (!spec.values.empty()) {
        grid = spec.values;
    } else {
        require(spec.count >= 1, "gamma grid needs at least one point");
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto* shard : {&seen_shard, &unseen_shard})
            for (Index i = 0; i < shard->scores.rows(); ++i)
                for (const Index c : catalog.seen()) {
                    lo = std::min(lo, shard->scores(i, c));
                    hi = std::max(hi, shard->scores(i, c));
                }
        const double spread = hi > lo ? hi - lo : 0.0;
        grid.push_back(0.0);
        if (spread > 0.0 && spec.count > 1)
            for (int k = 1; k < spec.count; ++k)
                grid.push_back(spread * static_cast<double>(k) / static_cast<double>(spec.count - 1));
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

GammaSweepResult sweep_gamma(const ScoreTable& seen_shard, const ScoreTable& unseen_shard,
                             const ClassCatalog& catalog, const GridSpec& spec) {
    require(!seen_shard.labels.empty(), "sweep_gamma: no seen-class validation samples, acc_s undefined");
    require(!unseen_shard.labels.empty(), "sweep_gamma: no unseen-class validation samples, acc_u undefined");
    GammaSweepResult r;
    r.grid = gamma_grid(seen_shard, unseen_shard, catalog, spec);
    r.best_hm = -1.0;
    for (const double g : r.grid) {
        const auto m = evaluate_gzsl(seen_shard, unseen_shard, catalog, g);
        r.hm_curve.push_back(m.hm);
        r.acc_u_curve.push_back(m.acc_u);
        r.acc_s_curve.push_back(m.acc_s);
        if (m.hm > r.best_hm) {
            r.best_hm = m.hm;
            r.best_gamma = g;
        }
    }
    return r;
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json j{{"acc_u", acc_u}, {"acc_s", acc_s}, {"hm", hm}, {"gamma_used", gamma_used}};
    j["t1"] = t1 ? nlohmann::json(*t1) : nlohmann::json(nullptr);
    j["per_class"] = nlohmann::json::object();
    for (const auto& [k, v] : per_class) j["per_class"][k] = v;
    return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.acc_u = j.at("acc_u").get<double>();
    r.acc_s = j.at("acc_s").get<double>();
    r.hm = j.at("hm").get<double>();
    r.gamma_used = j.at("gamma_used").get<double>();
    if (j.contains("t1") && !j["t1"].is_null()) r.t1 = j["t1"].get<double>();
    if (j.contains("per_class"))
        for (const auto& [k, v] : j["per_class"].items()) r.per_class[k] = v.get<double>();
    return r;
}

void GammaSweepResult::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "gamma,hm,acc_u,acc_s\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
        out << fmt_real(grid[i]) << "," << fmt_real(hm_curve[i]) << "," << fmt_real(acc_u_curve[i]) << ","
            << fmt_real(acc_s_curve[i]) << "\n";
}

}  // namespace fzsl
