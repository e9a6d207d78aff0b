#include "fzsl/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace fzsl {

namespace {

std::vector<Index> seen_local_labels(const SampleSet& set, const ClassCatalog& catalog,
                                     const std::vector<std::size_t>& idx) {
    std::vector<Index> out;
    out.reserve(idx.size());
    for (const auto i : idx) {
        const Index pos = catalog.seen_position(set.labels[i]);
        require(pos >= 0, "training sample labelled with an unseen class");
        out.push_back(pos);
    }
    return out;
}

std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, int batch_size, Rng& rng) {
    require(batch_size > 0, "batch size must be positive");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t s = 0; s < n; s += static_cast<std::size_t>(batch_size))
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                             order.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + static_cast<std::size_t>(batch_size))));
    return batches;
}

[[noreturn]] void diverged(double lr, const std::string& detail) {
    std::ostringstream msg;
    msg << "training diverged (" << detail << ") at learning rate " << lr << "; try a smaller learning rate";
    throw NumericError(msg.str());
}

void check_loss(double loss, double lr) {
    if (!std::isfinite(loss)) diverged(lr, "non-finite loss");
}

// Bad input features are reported as such; any numeric failure after that
// comes from the parameters and is reported as divergence.
std::vector<Matrix> gather_batch(const SampleSet& train, const std::vector<std::size_t>& idx) {
    std::vector<Matrix> raw;
    raw.reserve(idx.size());
    for (const auto i : idx) {
        if (!train.features[i].allFinite())
            throw NumericError("non-finite features in training sample '" +
                               (i < train.sample_ids.size() ? train.sample_ids[i] : std::to_string(i)) + "'");
        raw.push_back(train.features[i]);
    }
    return raw;
}

template <typename Step>
auto guarded(Step&& step, double lr) {
    try {
        return step();
    } catch (const NumericError& e) {
        diverged(lr, e.what());
    }
}

std::string fmt_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs_frozen < 0 || epochs_finetune < 0 || epochs_frozen + epochs_finetune == 0)
        throw ConfigError("train: epochs must be non-negative with a positive total");
    if (batch_size <= 0) throw ConfigError("train.batch_size must be positive");
    if (!(lr_frozen > 0.0)) throw ConfigError("train.lr_frozen must be positive");
    if (epochs_finetune > 0 && !(lr_finetune > 0.0)) throw ConfigError("train.lr_finetune must be positive");
    augment.validate();
}

const char* to_string(Phase p) { return p == Phase::frozen ? "frozen" : "finetune"; }

HeadStep head_step(const HeadModel& model, const std::vector<Matrix>& raw_batch, const std::vector<Index>& labels,
                   const Matrix& seen_classifiers, const AugmentConfig& augment, Rng& rng, bool with_trunk) {
    require(!raw_batch.empty(), "head_step: empty batch");
    const std::size_t B = raw_batch.size();
    std::vector<Matrix> F(B);
    std::vector<AttentionOutput<Real>> att(B);
    std::vector<Matrix> H(B);
    for (std::size_t b = 0; b < B; ++b) {
        F[b] = model.trunk.forward(raw_batch[b]);
        att[b] = attention_forward(F[b], model.head);
        H[b] = att[b].H;
    }
    const StepBatch<Real> step = augment_step(H, labels, seen_classifiers, augment, rng);

    HeadStep out;
    out.active_classes = step.classifiers.rows();
    out.head_grad = HeadParams<Real>::zeros(model.head.dims());
    out.trunk_grad = model.trunk.zeros_like();
    std::vector<Matrix> dH(B);
    for (std::size_t b = 0; b < B; ++b) dH[b] = Matrix::Zero(H[b].rows(), H[b].cols());

    const double scale = 1.0 / static_cast<double>(step.H.size());
    for (std::size_t i = 0; i < step.H.size(); ++i) {
        const auto emb = embed_forward(step.H[i], model.head);
        const Vector scores = score_classes(emb.psi, step.classifiers);
        Vector dscores;
        out.loss += scale * cross_entropy<Real>(scores, step.targets.row(static_cast<Index>(i)).transpose(), dscores);
        const Vector dpsi = step.classifiers.transpose() * (scale * dscores);
        const Matrix dHi = embed_backward(step.H[i], emb, dpsi, model.head, out.head_grad);
        const auto& blend = step.provenance[i];
        for (std::size_t k = 0; k < blend.sources.size(); ++k)
            dH[static_cast<std::size_t>(blend.sources[k])] += blend.row_weights[k].asDiagonal() * dHi;
    }
    for (std::size_t b = 0; b < B; ++b) {
        const Matrix dF = attention_backward(F[b], att[b].A, dH[b], model.head, out.head_grad);
        if (with_trunk) model.trunk.backward(raw_batch[b], F[b], dF, out.trunk_grad);
    }
    return out;
}

ShallowStep shallow_step(const ShallowModel& model, const std::vector<Matrix>& raw_batch,
                         const std::vector<Index>& labels, const Matrix& seen_classifiers,
                         const AugmentConfig& augment, Rng& rng) {
    require(!raw_batch.empty(), "shallow_step: empty batch");
    std::vector<Matrix> X;
    X.reserve(raw_batch.size());
    for (const auto& r : raw_batch) X.emplace_back(ShallowModel::flatten(r));
    const StepBatch<Real> step = augment_step(X, labels, seen_classifiers, augment, rng);
    std::vector<Vector> inputs;
    inputs.reserve(step.H.size());
    for (const auto& h : step.H) inputs.emplace_back(h.col(0));
    auto lg = forward_backward(inputs, step.targets, step.classifiers, model.params);
    return {lg.loss, step.classifiers.rows(), std::move(lg.grad)};
}

double train_epoch(HeadModel& model, const SampleSet& train, const ClassCatalog& catalog,
                   const AugmentConfig& augment, int batch_size, double lr, Optimizer& head_opt,
                   Optimizer* trunk_opt, Rng& rng) {
    require(!train.empty(), "train_epoch: empty training set");
    const Matrix seen = catalog.seen_classifiers();
    double total = 0.0;
    const auto batches = shuffled_batches(train.size(), batch_size, rng);
    for (const auto& idx : batches) {
        const std::vector<Matrix> raw = gather_batch(train, idx);
        const HeadStep s = guarded(
            [&] {
                return head_step(model, raw, seen_local_labels(train, catalog, idx), seen, augment, rng,
                                 trunk_opt != nullptr);
            },
            lr);
        check_loss(s.loss, lr);
        head_opt.step(model.head, s.head_grad, lr);
        if (trunk_opt) trunk_opt->step(model.trunk, s.trunk_grad, lr);
        total += s.loss;
    }
    return total / static_cast<double>(batches.size());
}

double train_epoch(ShallowModel& model, const SampleSet& train, const ClassCatalog& catalog,
                   const AugmentConfig& augment, int batch_size, double lr, Optimizer& opt, Rng& rng) {
    require(!train.empty(), "train_epoch: empty training set");
    const Matrix seen = catalog.seen_classifiers();
    double total = 0.0;
    const auto batches = shuffled_batches(train.size(), batch_size, rng);
    for (const auto& idx : batches) {
        const std::vector<Matrix> raw = gather_batch(train, idx);
        const ShallowStep s = guarded(
            [&] { return shallow_step(model, raw, seen_local_labels(train, catalog, idx), seen, augment, rng); }, lr);
        check_loss(s.loss, lr);
        opt.step(model.params, s.grad, lr);
        total += s.loss;
    }
    return total / static_cast<double>(batches.size());
}

double evaluation_loss(const HeadModel& model, const SampleSet& set, const ClassCatalog& catalog) {
    require(!set.empty(), "evaluation_loss: empty set");
    const Matrix seen = catalog.seen_classifiers();
    double total = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const Vector s = model.scores(set.features[i], seen);
        Vector d;
        total += cross_entropy<Real>(s, one_hot<Real>(catalog.seen_position(set.labels[i]), seen.rows()), d);
    }
    return total / static_cast<double>(set.size());
}

std::vector<EpochRecord> two_phase_train(HeadModel& model, const SampleSet& train, const SampleSet& val_seen,
                                         const SampleSet& val_unseen, const ClassCatalog& catalog,
                                         const TrainConfig& cfg) {
    cfg.validate();
    train.validate(catalog);
    Rng rng = Rng(cfg.seed).fork("train");
    Optimizer head_opt(cfg.optimizer);
    Optimizer trunk_opt(cfg.optimizer);
    std::vector<EpochRecord> records;
    const int total = cfg.epochs_frozen + cfg.epochs_finetune;
    for (int epoch = 0; epoch < total; ++epoch) {
        const bool finetune = epoch >= cfg.epochs_frozen;
        const double lr = finetune ? cfg.lr_finetune : cfg.lr_frozen;
        Optimizer* trunk = finetune && model.trunk.trainable() ? &trunk_opt : nullptr;
        EpochRecord r;
        r.epoch = epoch + 1;
        r.phase = finetune ? Phase::finetune : Phase::frozen;
        r.train_loss = train_epoch(model, train, catalog, cfg.augment, cfg.batch_size, lr, head_opt, trunk, rng);
        const auto sweep = sweep_gamma(model, val_seen, val_unseen, catalog, cfg.grid);
        const auto m = evaluate_gzsl(model, val_seen, val_unseen, catalog, sweep.best_gamma);
        r.best_gamma = sweep.best_gamma;
        r.val_acc_u = m.acc_u;
        r.val_acc_s = m.acc_s;
        r.val_hm = m.hm;
        records.push_back(r);
    }
    return records;
}

void record_curves(const std::vector<EpochRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "epoch,train_loss,val_acc_u,val_acc_s,val_hm,best_gamma,phase\n";
    for (const auto& r : records)
        out << r.epoch << "," << fmt_real(r.train_loss) << "," << fmt_real(r.val_acc_u) << ","
            << fmt_real(r.val_acc_s) << "," << fmt_real(r.val_hm) << "," << fmt_real(r.best_gamma) << ","
            << to_string(r.phase) << "\n";
}

std::vector<EpochRecord> read_curves(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "epoch,train_loss,val_acc_u,val_acc_s,val_hm,best_gamma,phase")
        throw FormatError(path.string() + ":1: unexpected curves header");
    std::vector<EpochRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 7 cells");
        EpochRecord r;
        try {
            r.epoch = std::stoi(cells[0]);
            r.train_loss = std::stod(cells[1]);
            r.val_acc_u = std::stod(cells[2]);
            r.val_acc_s = std::stod(cells[3]);
            r.val_hm = std::stod(cells[4]);
            r.best_gamma = std::stod(cells[5]);
        } catch (const std::exception&) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell");
        }
        if (cells[6] == "frozen") r.phase = Phase::frozen;
        else if (cells[6] == "finetune") r.phase = Phase::finetune;
        else throw FormatError(path.string() + ":" + std::to_string(line_no) + ": unknown phase " + cells[6]);
        out.push_back(r);
    }
    return out;
}

double kendall_tau_vs_index(const std::vector<double>& values) {
    const std::size_t n = values.size();
    long concordant = 0, discordant = 0, ties = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (values[j] > values[i]) ++concordant;
            else if (values[j] < values[i]) ++discordant;
            else ++ties;
        }
    const double pairs = static_cast<double>(n * (n - 1) / 2);
    const double denom = std::sqrt(pairs * (pairs - static_cast<double>(ties)));
    return denom > 0.0 ? static_cast<double>(concordant - discordant) / denom : 0.0;
}

}  // namespace fzsl
