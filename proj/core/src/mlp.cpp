#include "crahn/mlp.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "crahn/error.hpp"
#include "json.hpp"

namespace crahn {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mlp::Mlp(int inputs, int hidden, int outputs)
    : n_in(inputs),
      n_hidden(hidden),
      n_out(outputs),
      w1(static_cast<std::size_t>(hidden) * inputs, 0.0),
      b1(hidden, 0.0),
      w2(static_cast<std::size_t>(outputs) * hidden, 0.0),
      b2(outputs, 0.0) {
  if (inputs < 1 || hidden < 1 || outputs < 1) {
    throw Error(ErrorCode::DimensionMismatch, "network dimensions must be >= 1");
  }
}

Mlp Mlp::random(int inputs, int hidden, int outputs, RngStream& rng, double scale) {
  Mlp net(inputs, hidden, outputs);
  net.randomize(rng, scale);
  return net;
}

void Mlp::randomize(RngStream& rng, double scale) {
  for (std::size_t i = 0; i < parameter_count(); ++i) param(i) = rng.uniform(-scale, scale);
  initialized = true;
}

namespace {

template <typename Blocks>
auto& flat_at(Blocks& b, std::size_t i) {
  if (i < b.w1.size()) return b.w1[i];
  i -= b.w1.size();
  if (i < b.b1.size()) return b.b1[i];
  i -= b.b1.size();
  if (i < b.w2.size()) return b.w2[i];
  i -= b.w2.size();
  return b.b2.at(i);
}

void check_input(const Mlp& net, std::size_t len) {
  if (len != static_cast<std::size_t>(net.n_in)) {
    throw Error(ErrorCode::DimensionMismatch, "input has " + std::to_string(len) +
                                                  " entries, network expects " +
                                                  std::to_string(net.n_in));
  }
}

void check_sample(const Mlp& net, const Sample& s) {
  check_input(net, s.input.size());
  if (s.target.size() != static_cast<std::size_t>(net.n_out)) {
    throw Error(ErrorCode::DimensionMismatch, "target has " + std::to_string(s.target.size()) +
                                                  " entries, network has " +
                                                  std::to_string(net.n_out) + " outputs");
  }
}

struct Activations {
  std::vector<double> hidden;
  std::vector<double> output;
};

Activations activate(const Mlp& net, std::span<const double> x) {
  Activations a{std::vector<double>(net.n_hidden), std::vector<double>(net.n_out)};
  for (int h = 0; h < net.n_hidden; ++h) {
    double z = net.b1[h];
    const double* row = &net.w1[static_cast<std::size_t>(h) * net.n_in];
    for (int i = 0; i < net.n_in; ++i) z += row[i] * x[i];
    a.hidden[h] = sigmoid(z);
  }
  for (int o = 0; o < net.n_out; ++o) {
    double z = net.b2[o];
    const double* row = &net.w2[static_cast<std::size_t>(o) * net.n_hidden];
    for (int h = 0; h < net.n_hidden; ++h) z += row[h] * a.hidden[h];
    a.output[o] = sigmoid(z);
  }
  return a;
}

MlpGradient zero_gradient(const Mlp& net) {
  return MlpGradient{std::vector<double>(net.w1.size(), 0.0), std::vector<double>(net.b1.size(), 0.0),
                     std::vector<double>(net.w2.size(), 0.0), std::vector<double>(net.b2.size(), 0.0)};
}

// Adds d(loss)/d(param) for one sample into `g`.
double accumulate(const Mlp& net, const Sample& s, MlpGradient& g) {
  const Activations a = activate(net, s.input);
  std::vector<double> delta_out(net.n_out);
  double loss = 0.0;
  for (int o = 0; o < net.n_out; ++o) {
    const double err = a.output[o] - s.target[o];
    loss += err * err;
    delta_out[o] = (2.0 * err / net.n_out) * a.output[o] * (1.0 - a.output[o]);
  }
  std::vector<double> delta_hidden(net.n_hidden, 0.0);
  for (int o = 0; o < net.n_out; ++o) {
    const std::size_t row = static_cast<std::size_t>(o) * net.n_hidden;
    for (int h = 0; h < net.n_hidden; ++h) {
      g.w2[row + h] += delta_out[o] * a.hidden[h];
      delta_hidden[h] += delta_out[o] * net.w2[row + h];
    }
    g.b2[o] += delta_out[o];
  }
  for (int h = 0; h < net.n_hidden; ++h) {
    const double d = delta_hidden[h] * a.hidden[h] * (1.0 - a.hidden[h]);
    const std::size_t row = static_cast<std::size_t>(h) * net.n_in;
    for (int i = 0; i < net.n_in; ++i) g.w1[row + i] += d * s.input[i];
    g.b1[h] += d;
  }
  return loss / net.n_out;
}

}  // namespace

double& Mlp::param(std::size_t i) { return flat_at(*this, i); }
double Mlp::param(std::size_t i) const { return flat_at(*this, i); }
double& MlpGradient::operator[](std::size_t i) { return flat_at(*this, i); }
double MlpGradient::operator[](std::size_t i) const { return flat_at(*this, i); }

std::vector<double> forward(const Mlp& net, std::span<const double> x) {
  check_input(net, x.size());
  return activate(net, x).output;
}

double sample_loss(const Mlp& net, const Sample& sample) {
  check_sample(net, sample);
  const auto y = activate(net, sample.input).output;
  double loss = 0.0;
  for (int o = 0; o < net.n_out; ++o) {
    const double err = y[o] - sample.target[o];
    loss += err * err;
  }
  return loss / net.n_out;
}

double dataset_mse(const Mlp& net, const Dataset& data) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no samples");
  double total = 0.0;
  for (const auto& s : data) total += sample_loss(net, s);
  return total / static_cast<double>(data.size());
}

MlpGradient gradient(const Mlp& net, const Sample& sample) {
  check_sample(net, sample);
  MlpGradient g = zero_gradient(net);
  accumulate(net, sample, g);
  return g;
}

TrainResult train(Mlp net, const Dataset& data, const TrainConfig& cfg, RngStream& rng) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "cannot train on an empty dataset");
  for (const auto& s : data) check_sample(net, s);
  if (!net.initialized) net.randomize(rng, cfg.init_scale);

  TrainResult result;
  Mlp best = net;
  double best_mse = std::numeric_limits<double>::infinity();
  const double inv_n = 1.0 / static_cast<double>(data.size());
  int epoch = 0;
  bool reached = false;

  while (epoch < cfg.max_epochs) {
    ++epoch;
    MlpGradient g = zero_gradient(net);
    double mse = 0.0;
    for (const auto& s : data) mse += accumulate(net, s, g);
    mse *= inv_n;
    result.mse_history.push_back(mse);
    if (mse < best_mse) {
      best_mse = mse;
      best = net;
    }
    if (mse <= cfg.target_mse) {
      reached = true;
      break;
    }
    for (std::size_t i = 0; i < net.parameter_count(); ++i) {
      net.param(i) -= cfg.learning_rate * g[i] * inv_n;
    }
  }

  double final_mse = reached ? result.mse_history.back() : dataset_mse(net, data);
  if (best_mse < final_mse) {
    net = best;
    final_mse = best_mse;
  }
  result.net = std::move(net);
  result.final_mse = final_mse;
  result.epochs_used = epoch;
  return result;
}

std::string to_json(const Mlp& net) {
  nlohmann::json j;
  j["n_in"] = net.n_in;
  j["n_hidden"] = net.n_hidden;
  j["n_out"] = net.n_out;
  j["w1"] = net.w1;
  j["b1"] = net.b1;
  j["w2"] = net.w2;
  j["b2"] = net.b2;
  return j.dump(2) + "\n";
}

Mlp mlp_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigParse, std::string("model: ") + e.what());
  }
  Mlp net;
  try {
    net = Mlp(j.at("n_in").get<int>(), j.at("n_hidden").get<int>(), j.at("n_out").get<int>());
    auto w1 = j.at("w1").get<std::vector<double>>();
    auto b1 = j.at("b1").get<std::vector<double>>();
    auto w2 = j.at("w2").get<std::vector<double>>();
    auto b2 = j.at("b2").get<std::vector<double>>();
    if (w1.size() != net.w1.size() || b1.size() != net.b1.size() || w2.size() != net.w2.size() ||
        b2.size() != net.b2.size()) {
      throw Error(ErrorCode::DimensionMismatch, "model arrays do not match declared shape");
    }
    net.w1 = std::move(w1);
    net.b1 = std::move(b1);
    net.w2 = std::move(w2);
    net.b2 = std::move(b2);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigParse, std::string("model: ") + e.what());
  }
  net.initialized = true;
  return net;
}

void save_model(const Mlp& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write model '" + path + "'");
  out << to_json(net);
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

Mlp load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read model '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return mlp_from_json(buf.str());
}

}  // namespace crahn
