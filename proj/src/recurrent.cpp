#include "gridguard/recurrent.hpp"

#include "gridguard/error.hpp"
#include "gridguard/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gridguard {

std::string_view to_string(Activation activation) {
    return activation == Activation::Relu ? "relu" : "tanh";
}

Activation parse_activation(std::string_view text) {
    if (text == "relu") return Activation::Relu;
    if (text == "tanh") return Activation::Tanh;
    throw ValidationError("activation must be 'relu' or 'tanh', got '" + std::string(text) + "'");
}

RecurrentModel::RecurrentModel(std::size_t hidden, std::size_t layers, Activation activation)
    : hidden_(hidden), layers_(layers), activation_(activation) {
    if (hidden == 0 || layers == 0) throw ValidationError("recurrent model needs hidden >= 1 and layers >= 1");
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        layer_offset_.push_back(offset);
        offset += hidden * layer_input_width(l) + hidden * hidden + hidden;
    }
    layer_offset_.push_back(offset);
    params_.assign(offset + 2 * hidden + 2, 0.0);
}

RecurrentModel RecurrentModel::random(std::size_t hidden, std::size_t layers,
                                      Activation activation, std::uint64_t seed) {
    RecurrentModel m(hidden, layers, activation);
    Rng rng(seed);
    const double k = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (auto& p : m.params_) p = rng.uniform(-k, k);
    return m;
}

std::size_t RecurrentModel::w_in_offset(std::size_t layer) const { return layer_offset_[layer]; }
std::size_t RecurrentModel::w_rec_offset(std::size_t layer) const {
    return layer_offset_[layer] + hidden_ * layer_input_width(layer);
}
std::size_t RecurrentModel::bias_offset(std::size_t layer) const {
    return w_rec_offset(layer) + hidden_ * hidden_;
}
std::size_t RecurrentModel::w_out_offset() const { return layer_offset_[layers_]; }
std::size_t RecurrentModel::b_out_offset() const { return w_out_offset() + 2 * hidden_; }

namespace {

/// Per-layer pre-activations and hidden states, [t * hidden + j].
struct Trace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> h;
    std::array<double, 2> probs{};
};

double activate(Activation a, double x) {
    return a == Activation::Relu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

Trace forward_trace(const RecurrentModel& m, std::span<const double> seq) {
    if (seq.empty()) throw ValidationError("sequence must have at least one step");
    const auto p = m.parameters();
    const auto H = m.hidden();
    const auto T = seq.size();
    Trace tr;
    tr.pre.assign(m.layers(), std::vector<double>(T * H));
    tr.h.assign(m.layers(), std::vector<double>(T * H));

    for (std::size_t l = 0; l < m.layers(); ++l) {
        const auto D = m.layer_input_width(l);
        const double* w_in = p.data() + m.w_in_offset(l);
        const double* w_rec = p.data() + m.w_rec_offset(l);
        const double* b = p.data() + m.bias_offset(l);
        auto& pre = tr.pre[l];
        auto& h = tr.h[l];
        for (std::size_t t = 0; t < T; ++t) {
            const double* in = l == 0 ? &seq[t] : &tr.h[l - 1][t * H];
            for (std::size_t j = 0; j < H; ++j) {
                double a = b[j];
                for (std::size_t i = 0; i < D; ++i) a += w_in[j * D + i] * in[i];
                if (t > 0)
                    for (std::size_t k = 0; k < H; ++k) a += w_rec[j * H + k] * h[(t - 1) * H + k];
                pre[t * H + j] = a;
                h[t * H + j] = activate(m.activation(), a);
            }
        }
    }

    const double* w_out = p.data() + m.w_out_offset();
    const double* b_out = p.data() + m.b_out_offset();
    const double* last = &tr.h.back()[(T - 1) * H];
    std::array<double, 2> z{b_out[0], b_out[1]};
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t j = 0; j < H; ++j) z[c] += w_out[c * H + j] * last[j];
    const double zmax = std::max(z[0], z[1]);
    const double e0 = std::exp(z[0] - zmax);
    const double e1 = std::exp(z[1] - zmax);
    tr.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
    return tr;
}

double cross_entropy(const std::array<double, 2>& probs, int label) {
    return -std::log(std::max(probs[static_cast<std::size_t>(label)],
                              std::numeric_limits<double>::min()));
}

}  // namespace

std::array<double, 2> rnn_forward(const RecurrentModel& model, std::span<const double> sequence) {
    return forward_trace(model, sequence).probs;
}

int rnn_predict(const RecurrentModel& model, std::span<const double> sequence) {
    return rnn_forward(model, sequence)[1] >= 0.5 ? 1 : 0;
}

double rnn_loss(const RecurrentModel& model, std::span<const double> sequence, int label) {
    return cross_entropy(rnn_forward(model, sequence), label);
}

double min_abs_preactivation(const RecurrentModel& model, std::span<const double> sequence) {
    const auto tr = forward_trace(model, sequence);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& layer : tr.pre)
        for (double a : layer) best = std::min(best, std::abs(a));
    return best;
}

double rnn_loss_and_gradient(const RecurrentModel& m, std::span<const double> seq, int label,
                             std::span<double> grad) {
    if (label != 0 && label != 1) throw ValidationError("label must be 0 or 1");
    const auto p = m.parameters();
    if (grad.size() != p.size()) throw ValidationError("gradient buffer has the wrong size");
    const auto tr = forward_trace(m, seq);
    const auto H = m.hidden();
    const auto T = seq.size();

    // softmax + cross-entropy
    std::array<double, 2> dz{tr.probs[0], tr.probs[1]};
    dz[static_cast<std::size_t>(label)] -= 1.0;
    const double* last = &tr.h.back()[(T - 1) * H];
    const double* w_out = p.data() + m.w_out_offset();
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t j = 0; j < H; ++j) grad[m.w_out_offset() + c * H + j] += dz[c] * last[j];
        grad[m.b_out_offset() + c] += dz[c];
    }

    // gradient arriving at each layer's hidden states from above
    std::vector<double> from_above(T * H, 0.0);
    for (std::size_t j = 0; j < H; ++j)
        from_above[(T - 1) * H + j] = w_out[j] * dz[0] + w_out[H + j] * dz[1];

    std::vector<double> carry(H), g(H), next_carry(H);
    for (std::size_t l = m.layers(); l-- > 0;) {
        const auto D = m.layer_input_width(l);
        const double* w_in = p.data() + m.w_in_offset(l);
        const double* w_rec = p.data() + m.w_rec_offset(l);
        double* g_w_in = grad.data() + m.w_in_offset(l);
        double* g_w_rec = grad.data() + m.w_rec_offset(l);
        double* g_b = grad.data() + m.bias_offset(l);
        const auto& pre = tr.pre[l];
        const auto& h = tr.h[l];
        std::vector<double> to_below(l > 0 ? T * D : 0, 0.0);
        std::fill(carry.begin(), carry.end(), 0.0);

        for (std::size_t t = T; t-- > 0;) {
            for (std::size_t j = 0; j < H; ++j) {
                const double dh = from_above[t * H + j] + carry[j];
                const double slope = m.activation() == Activation::Relu
                                         ? (pre[t * H + j] > 0.0 ? 1.0 : 0.0)
                                         : 1.0 - h[t * H + j] * h[t * H + j];
                g[j] = dh * slope;
            }
            const double* in = l == 0 ? &seq[t] : &tr.h[l - 1][t * H];
            for (std::size_t j = 0; j < H; ++j) {
                if (g[j] == 0.0) continue;
                for (std::size_t i = 0; i < D; ++i) g_w_in[j * D + i] += g[j] * in[i];
                if (t > 0)
                    for (std::size_t k = 0; k < H; ++k) g_w_rec[j * H + k] += g[j] * h[(t - 1) * H + k];
                g_b[j] += g[j];
            }
            std::fill(next_carry.begin(), next_carry.end(), 0.0);
            for (std::size_t j = 0; j < H; ++j)
                for (std::size_t k = 0; k < H; ++k) next_carry[k] += w_rec[j * H + k] * g[j];
            carry.swap(next_carry);
            if (l > 0)
                for (std::size_t j = 0; j < H; ++j)
                    for (std::size_t i = 0; i < D; ++i) to_below[t * D + i] += w_in[j * D + i] * g[j];
        }
        if (l > 0) from_above.swap(to_below);
    }
    return cross_entropy(tr.probs, label);
}

double gradient_check(const RecurrentModel& model, std::span<const double> sequence, int label,
                      double epsilon) {
    std::vector<double> analytic(model.parameters().size(), 0.0);
    rnn_loss_and_gradient(model, sequence, label, analytic);
    RecurrentModel probe = model;
    auto params = probe.parameters();
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + epsilon;
        const double up = rnn_loss(probe, sequence, label);
        params[i] = saved - epsilon;
        const double down = rnn_loss(probe, sequence, label);
        params[i] = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
    }
    return worst;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (!(base_lr > 0.0)) throw ValidationError("learning rate must be positive");
    if (batch_size < 1) throw ValidationError("mini batch size must be >= 1");
    if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0))
        throw ValidationError("warm-up fraction must lie in [0, 1]");
    if (patience < 1) throw ValidationError("early stopping patience must be >= 1");
    if (k_folds < 1) throw ValidationError("k folds must be >= 1");
    if (!(split > 0.0 && split < 1.0)) throw ValidationError("train test split must lie in (0, 1)");
}

namespace {

double mean_loss(const RecurrentModel& model, const Dataset& data) {
    double total = 0.0;
    for (const auto& s : data.samples) total += rnn_loss(model, s.values, s.label);
    return data.samples.empty() ? 0.0 : total / static_cast<double>(data.samples.size());
}

}  // namespace

TrainResult rnn_train(const RecurrentModel& initial, const Dataset& train, const TrainConfig& config,
                      const Dataset* validation) {
    config.validate();
    const auto counts = train.class_counts();
    if (counts[0] == 0 || counts[1] == 0) throw ValidationError("training data must contain both classes");

    const Dataset* fit_set = &train;
    Dataset carved_train, carved_validation;
    if (config.early_stopping && validation == nullptr && counts[0] >= 10 && counts[1] >= 10) {
        const auto labels = train.labels();
        const auto split = train_test_split(labels, 0.1, derive_seed(config.seed, "validation"));
        carved_train = train.subset(split.train);
        carved_validation = train.subset(split.test);
        fit_set = &carved_train;
        validation = &carved_validation;
    }

    TrainResult result{initial, {}};
    auto& model = result.model;
    RecurrentModel best = model;
    double best_loss = std::numeric_limits<double>::infinity();
    int since_best = 0;

    const auto n = fit_set->size();
    std::vector<std::size_t> order(n);
    std::vector<double> grad(model.parameters().size());
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const double lr = lr_schedule(epoch, config.epochs, config.base_lr, config.warmup_fraction);
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const auto stop = std::min(n, start + config.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const auto& s = fit_set->samples[order[k]];
                batch_loss += rnn_loss_and_gradient(model, s.values, s.label, grad);
            }
            if (!std::isfinite(batch_loss))
                throw RuntimeFailure("non-finite training loss at epoch " + std::to_string(epoch) +
                                     ", batch starting at " + std::to_string(start));
            const double scale = lr / static_cast<double>(stop - start);
            auto params = model.parameters();
            for (std::size_t i = 0; i < params.size(); ++i) params[i] -= scale * grad[i];
            epoch_loss += batch_loss;
        }

        EpochRecord rec{epoch, lr, epoch_loss / static_cast<double>(n),
                        std::numeric_limits<double>::quiet_NaN()};
        const double monitored = validation ? mean_loss(model, *validation) : rec.train_loss;
        if (validation) rec.validation_loss = monitored;
        result.history.epochs.push_back(rec);

        if (config.early_stopping) {
            if (monitored < best_loss) {
                best_loss = monitored;
                best = model;
                result.history.best_epoch = epoch;
                since_best = 0;
            } else if (++since_best >= config.patience) {
                result.history.stopped_early = true;
                break;
            }
        } else {
            result.history.best_epoch = epoch;
        }
    }
    if (config.early_stopping) model = best;
    return result;
}

double rnn_accuracy(const RecurrentModel& model, const Dataset& data) {
    if (data.samples.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& s : data.samples) hits += rnn_predict(model, s.values) == s.label ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(data.samples.size());
}

std::vector<ScoreReport> rnn_cross_validate(const RecurrentModel& initial, const Dataset& data,
                                            const TrainConfig& config) {
    std::vector<ScoreReport> reports;
    if (config.k_folds <= 1) return reports;
    const auto labels = data.labels();
    const auto folds = kfold(labels, config.k_folds, derive_seed(config.seed, "kfold"), config.split);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto train = data.subset(folds[f].train);
        const auto test = data.subset(folds[f].test);
        auto fold_config = config;
        fold_config.seed = derive_seed(config.seed, static_cast<std::uint64_t>(1000 + f));
        const auto trained = rnn_train(initial, train, fold_config);
        std::vector<int> truth, predicted;
        for (const auto& s : test.samples) {
            truth.push_back(s.label);
            predicted.push_back(rnn_predict(trained.model, s.values));
        }
        auto report = scores(confusion(truth, predicted));
        report.meta.model = "RNN";
        report.meta.hyperparameters["fold"] = std::to_string(f + 1);
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace gridguard
