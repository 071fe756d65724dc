#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crahn/config.hpp"
#include "crahn/rng.hpp"

namespace crahn {

double sigmoid(double x);

/// Three-layer feed-forward network: input -> sigmoid hidden -> sigmoid output.
///
/// Weight matrices are row-major: w1 is n_hidden x n_in, w2 is n_out x n_hidden.
struct Mlp {
  int n_in = 0;
  int n_hidden = 0;
  int n_out = 0;
  std::vector<double> w1, b1, w2, b2;
  /// When false, train() draws fresh weights before descending.
  bool initialized = false;

  Mlp() = default;
  /// All-zero parameters, flagged uninitialized.
  Mlp(int inputs, int hidden, int outputs);

  static Mlp random(int inputs, int hidden, int outputs, RngStream& rng, double scale);

  /// Uniform in [-scale, scale] for every parameter; marks the net initialized.
  void randomize(RngStream& rng, double scale);

  std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  /// Flat view over all parameters in the order w1, b1, w2, b2.
  double& param(std::size_t i);
  double param(std::size_t i) const;
};

/// Gradients laid out exactly like the Mlp parameters.
struct MlpGradient {
  std::vector<double> w1, b1, w2, b2;

  double& operator[](std::size_t i);
  double operator[](std::size_t i) const;
  std::size_t size() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
};

struct Sample {
  std::vector<double> input;
  std::vector<double> target;
};

using Dataset = std::vector<Sample>;

/// Throws DimensionMismatch if x has the wrong length.
std::vector<double> forward(const Mlp& net, std::span<const double> x);

/// Mean of squared errors over the output entries for one sample.
double sample_loss(const Mlp& net, const Sample& sample);

/// Mean of sample_loss over the dataset. Throws EmptyDataset.
double dataset_mse(const Mlp& net, const Dataset& data);

/// Backpropagated gradient of sample_loss w.r.t. every parameter.
MlpGradient gradient(const Mlp& net, const Sample& sample);

struct TrainResult {
  Mlp net;
  double final_mse = 0.0;
  int epochs_used = 0;
  /// Training MSE measured at the start of each epoch (before the update).
  std::vector<double> mse_history;
};

/// Full-batch gradient descent on dataset MSE. Stops at the first epoch whose
/// MSE is <= target_mse, or after max_epochs updates. Returns whichever of
/// the final and best-seen weights has the lower training MSE.
TrainResult train(Mlp net, const Dataset& data, const TrainConfig& cfg, RngStream& rng);

/// JSON model document {n_in, n_hidden, n_out, w1, b1, w2, b2}.
std::string to_json(const Mlp& net);
/// Throws ConfigParse on malformed text and DimensionMismatch on shape errors.
Mlp mlp_from_json(std::string_view text);

void save_model(const Mlp& net, const std::string& path);
Mlp load_model(const std::string& path);

}  // namespace crahn
