#pragma once

#include "gridguard/dataset.hpp"
#include "gridguard/evaluation.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gridguard {

enum class Activation { Relu, Tanh };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view text);

/// Stacked Elman network over scalar sequences with a 2-class softmax head.
///
/// Parameters live in one flat vector. Per layer l (input width D = 1 for
/// the first layer, hidden otherwise): W_in (hidden x D), W_rec
/// (hidden x hidden), b (hidden); then W_out (2 x hidden), b_out (2).
class RecurrentModel {
public:
    RecurrentModel(std::size_t hidden, std::size_t layers, Activation activation);

    /// Uniform init in [-1/sqrt(hidden), 1/sqrt(hidden)], seeded.
    static RecurrentModel random(std::size_t hidden, std::size_t layers, Activation activation,
                                 std::uint64_t seed);

    std::size_t input_dim() const { return 1; }
    std::size_t hidden() const { return hidden_; }
    std::size_t layers() const { return layers_; }
    Activation activation() const { return activation_; }

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }

    std::size_t layer_input_width(std::size_t layer) const { return layer == 0 ? 1 : hidden_; }
    std::size_t w_in_offset(std::size_t layer) const;
    std::size_t w_rec_offset(std::size_t layer) const;
    std::size_t bias_offset(std::size_t layer) const;
    std::size_t w_out_offset() const;
    std::size_t b_out_offset() const;

    bool operator==(const RecurrentModel&) const = default;

private:
    std::size_t hidden_;
    std::size_t layers_;
    Activation activation_;
    std::vector<std::size_t> layer_offset_;
    std::vector<double> params_;
};

/// Softmax class probabilities for one sequence.
std::array<double, 2> rnn_forward(const RecurrentModel& model, std::span<const double> sequence);

int rnn_predict(const RecurrentModel& model, std::span<const double> sequence);

/// Cross-entropy loss of one labeled sequence; the full BPTT gradient is
/// added into `gradient` (sized like the parameter vector).
double rnn_loss_and_gradient(const RecurrentModel& model, std::span<const double> sequence,
                             int label, std::span<double> gradient);

double rnn_loss(const RecurrentModel& model, std::span<const double> sequence, int label);

/// Smallest |pre-activation| seen in a forward pass; ReLU gradients are only
/// checkable when this stays clear of 0.
double min_abs_preactivation(const RecurrentModel& model, std::span<const double> sequence);

/// Max over all parameters of |analytic - numeric| / max(|analytic|,
/// |numeric|, 1e-6), numeric from central differences.
double gradient_check(const RecurrentModel& model, std::span<const double> sequence, int label,
                      double epsilon = 1e-5);

struct TrainConfig {
    int epochs = 20;
    double base_lr = 1e-6;
    std::size_t batch_size = 60;
    double warmup_fraction = 0.10;
    bool early_stopping = true;
    int patience = 3;
    int k_folds = 5;
    double split = 0.3;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double validation_loss = 0.0;  ///< NaN when no validation data
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    bool stopped_early = false;
    int best_epoch = 0;
};

struct TrainResult {
    RecurrentModel model;
    TrainHistory history;
};

/// Minibatch SGD with BPTT and warm-up. When early stopping is on, the
/// validation set (or a stratified 10% carve-out of `train` when none is
/// given) is monitored and the best parameters are restored. Throws
/// RuntimeFailure on a non-finite loss.
TrainResult rnn_train(const RecurrentModel& initial, const Dataset& train, const TrainConfig& config,
                      const Dataset* validation = nullptr);

/// Fraction of samples whose predicted label matches.
double rnn_accuracy(const RecurrentModel& model, const Dataset& data);

/// Scores per fold for k > 1 (trains a fresh copy of `initial` per fold).
std::vector<ScoreReport> rnn_cross_validate(const RecurrentModel& initial, const Dataset& data,
                                            const TrainConfig& config);

}  // namespace gridguard
