#pragma once

// AdamW optimization, weighted accuracy evaluation and learning-rate /
// weight-decay grid search. Everything is sequential and seeded, so a
// given config and data reproduce bit-identical results.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "chgat/autograd.hpp"
#include "chgat/config.hpp"
#include "chgat/error.hpp"
#include "chgat/layers.hpp"
#include "chgat/model.hpp"
#include "chgat/naive_bayes.hpp"
#include "chgat/name_dataset.hpp"
#include "chgat/params.hpp"

namespace chgat {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  std::vector<double> grid_learning_rates{1e-3, 5e-4, 1e-4};
  std::vector<double> grid_weight_decays{0.0, 1e-2};
  std::uint64_t seed = 42;
  std::string variant = "full";
  bool use_example_weights = true;

  void validate() const {
    if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
    if (learning_rate < 0.0 || weight_decay < 0.0) throw InvalidArgument("learning_rate and weight_decay must be >= 0");
    if (grid_learning_rates.empty() || grid_weight_decays.empty()) throw InvalidArgument("grid lists must be non-empty");
    for (double v : grid_learning_rates)
      if (!(v > 0.0)) throw InvalidArgument("grid learning rates must be positive");
    for (double v : grid_weight_decays)
      if (v < 0.0) throw InvalidArgument("grid weight decays must be >= 0");
  }
};

template <class M>
concept TrainableModel = requires(M& m, const M& cm, const std::vector<std::string>& chars, const ForwardContext& ctx) {
  { m.parameters() } -> std::same_as<ParamStore&>;
  { cm.logits(chars, ctx) } -> std::same_as<ad::Var>;
  { cm.dropout_rate() } -> std::convertible_to<double>;
};

/// Decoupled weight decay Adam: p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p).
class AdamW {
 public:
  explicit AdamW(const ParamStore& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& e : params.entries()) {
      m_.emplace_back(e.var.size(), 0.0);
      v_.emplace_back(e.var.size(), 0.0);
    }
  }

  void step(ParamStore& params, double lr, double weight_decay) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto& entries = params.entries();
    for (std::size_t k = 0; k < entries.size(); ++k) {
      ad::Var var = entries[k].var;
      auto& p = var.mutable_value();
      const auto& g = var.grad();
      for (std::size_t i = 0; i < p.size(); ++i) {
        m_[k][i] = beta1_ * m_[k][i] + (1.0 - beta1_) * g[i];
        v_[k][i] = beta2_ * v_[k][i] + (1.0 - beta2_) * g[i] * g[i];
        const double update = (m_[k][i] / c1) / (std::sqrt(v_[k][i] / c2) + eps_) + weight_decay * p[i];
        p[i] -= lr * update;
      }
    }
    params.round_to_float();
  }

  std::size_t steps() const noexcept { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct ClassCounts {
  std::size_t examples = 0;
  std::uint64_t weight = 0;
  std::uint64_t correct_weight = 0;
};

struct EvalReport {
  double accuracy = 0.0;
  std::size_t n_examples = 0;
  std::uint64_t n_weighted = 0;
  std::uint64_t correct_weight = 0;
  std::array<ClassCounts, 2> per_class{};  // indexed by true label
};

/// Occurrence-weighted accuracy of `predict` (name -> label).
template <class Predictor>
EvalReport evaluate_with(const Predictor& predict, const std::vector<LabeledExample>& examples) {
  if (examples.empty()) throw InvalidArgument("evaluation set is empty");
  EvalReport r;
  for (const auto& e : examples) {
    const int label = predict(e.first_name);
    auto& c = r.per_class[static_cast<std::size_t>(e.label)];
    ++c.examples;
    c.weight += e.weight;
    r.n_weighted += e.weight;
    if (label == e.label) {
      c.correct_weight += e.weight;
      r.correct_weight += e.weight;
    }
  }
  r.n_examples = examples.size();
  r.accuracy = static_cast<double>(r.correct_weight) / static_cast<double>(r.n_weighted);
  return r;
}

template <TrainableModel M>
EvalReport evaluate(const M& model, const std::vector<LabeledExample>& examples) {
  return evaluate_with(
      [&](const std::string& name) {
        const auto l = model.logits(split_name(name), ForwardContext{});
        return l.value()[1] > l.value()[0] ? 1 : 0;
      },
      examples);
}

inline EvalReport evaluate(const NBModel& model, const std::vector<LabeledExample>& examples) {
  return evaluate_with([&](const std::string& name) { return nb_predict(model, name).label; }, examples);
}

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 = initial parameters
  double best_val_accuracy = 0.0;
  double initial_val_accuracy = 0.0;
};

/// Minimizes the summed binary cross-entropy with AdamW. Leaves `model`
/// holding the parameters of the epoch with the best validation accuracy
/// (the initial parameters count as epoch 0; earlier epochs win ties).
template <TrainableModel M>
TrainResult train(const TrainConfig& config, M& model, const std::vector<LabeledExample>& train_set,
                  const std::vector<LabeledExample>& val_set) {
  config.validate();
  if (train_set.empty()) throw EmptyTrainingSet();
  if (val_set.empty()) throw InvalidArgument("validation set is empty");

  ParamStore& params = model.parameters();
  TrainResult result;
  result.initial_val_accuracy = evaluate(model, val_set).accuracy;
  result.best_val_accuracy = result.initial_val_accuracy;
  auto best = params.snapshot();

  AdamW optimizer(params);
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::mt19937_64 dropout_rng(config.seed ^ 0xD1B54A32D192ED03ULL);
  ForwardContext ctx{Mode::train, &dropout_rng, model.dropout_rate()};

  std::vector<std::vector<std::string>> chars;
  chars.reserve(train_set.size());
  for (const auto& e : train_set) chars.push_back(split_name(e.first_name));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<ad::Var> rows;
      std::vector<int> labels;
      std::vector<double> weights;
      double weight_sum = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = train_set[order[i]];
        rows.push_back(model.logits(chars[order[i]], ctx));
        labels.push_back(ex.label);
        weights.push_back(config.use_example_weights ? static_cast<double>(ex.weight) : 1.0);
        weight_sum += weights.back();
      }
      // Weights rescaled to average 1 so the step size does not depend on raw counts.
      for (auto& w : weights) w *= static_cast<double>(weights.size()) / weight_sum;
      const auto batch_loss = ad::binary_cross_entropy(ad::concat_rows(rows), labels, weights);
      if (!std::isfinite(batch_loss.item())) throw DivergedLoss(epoch, batch_index, batch_loss.item());
      params.zero_grad();
      batch_loss.backward();
      optimizer.step(params, config.learning_rate, config.weight_decay);
      epoch_loss += batch_loss.item();
    }
    const double val_acc = evaluate(model, val_set).accuracy;
    result.history.push_back({epoch, epoch_loss / static_cast<double>(train_set.size()), val_acc});
    if (val_acc > result.best_val_accuracy) {
      result.best_val_accuracy = val_acc;
      result.best_epoch = epoch;
      best = params.snapshot();
    }
  }
  params.restore(best);
  return result;
}

inline void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_loss,val_accuracy\n";
  for (const auto& h : history) {
    out << h.epoch << ',' << format_double(h.train_loss) << ',' << format_double(h.val_accuracy) << '\n';
  }
}

struct GridCell {
  double learning_rate = 0.0;
  double weight_decay = 0.0;
  double val_accuracy = std::numeric_limits<double>::quiet_NaN();
  std::string status;  // "best", "ok", or "failed: <reason>"
};

template <class M>
struct GridSearchResult {
  std::vector<GridCell> cells;
  std::size_t best_index = 0;
  std::optional<M> best_model;
  TrainResult best_result;

  double best_learning_rate() const { return cells[best_index].learning_rate; }
  double best_weight_decay() const { return cells[best_index].weight_decay; }
};

/// Trains one freshly built model per (learning rate, weight decay) cell and
/// keeps the one with the best validation accuracy; ties go to the lower
/// learning rate, then the lower weight decay. Failing cells are recorded
/// and skipped; throws TrainingFailed only if every cell fails.
template <class Factory>
auto grid_search(const TrainConfig& config, Factory&& factory, const std::vector<LabeledExample>& train_set,
                 const std::vector<LabeledExample>& val_set) {
  using M = std::decay_t<decltype(factory(config))>;
  config.validate();
  GridSearchResult<M> out;
  std::optional<std::size_t> best;
  for (double lr : config.grid_learning_rates) {
    for (double wd : config.grid_weight_decays) {
      TrainConfig cell = config;
      cell.learning_rate = lr;
      cell.weight_decay = wd;
      GridCell row{lr, wd, std::numeric_limits<double>::quiet_NaN(), "ok"};
      try {
        M model = factory(cell);
        auto result = train(cell, model, train_set, val_set);
        row.val_accuracy = result.best_val_accuracy;
        const bool better = !best || [&] {
          const auto& b = out.cells[*best];
          if (row.val_accuracy != b.val_accuracy) return row.val_accuracy > b.val_accuracy;
          if (lr != b.learning_rate) return lr < b.learning_rate;
          return wd < b.weight_decay;
        }();
        if (better) {
          best = out.cells.size();
          out.best_model.emplace(std::move(model));
          out.best_result = std::move(result);
        }
      } catch (const Error& e) {
        row.status = std::string("failed: ") + e.what();
      }
      out.cells.push_back(std::move(row));
    }
  }
  if (!best) throw TrainingFailed("every grid cell failed");
  out.best_index = *best;
  out.cells[*best].status = "best";
  return out;
}

inline void write_grid_csv(std::ostream& out, const std::vector<GridCell>& cells) {
  out << "lr,wd,val_accuracy,status\n";
  for (const auto& c : cells) {
    std::string status = c.status;
    std::replace(status.begin(), status.end(), ',', ';');
    out << format_double(c.learning_rate) << ',' << format_double(c.weight_decay) << ','
        << (std::isnan(c.val_accuracy) ? std::string("nan") : format_double(c.val_accuracy)) << ',' << status << '\n';
  }
}

}  // namespace chgat
