#include "riskagg/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "riskagg/error.hpp"
#include "riskagg/panel.hpp"

namespace riskagg {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::MatrixXd apply(Activation a, const Eigen::MatrixXd& pre) {
  if (a == Activation::Identity) return pre;
  return pre.unaryExpr([a](double v) { return activate(a, v); });
}

Eigen::MatrixXd apply_derivative(Activation a, const Eigen::MatrixXd& pre) {
  return pre.unaryExpr([a](double v) { return activate_derivative(a, v); });
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx, std::size_t begin,
                        std::size_t end) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(end - begin), m.cols());
  for (std::size_t r = begin; r < end; ++r) out.row(static_cast<Eigen::Index>(r - begin)) = m.row(idx[r]);
  return out;
}

Eigen::MatrixXd columns_of(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(cols[k]);
  return out;
}

struct AdamState {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  long step = 0;

  explicit AdamState(const Network& net) {
    for (const auto& layer : net.layers()) {
      mw.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
      vw.push_back(mw.back());
      mb.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
      vb.push_back(mb.back());
    }
  }

  void update(Network& net, const Gradients& g, const TrainConfig& c) {
    ++step;
    const double b1 = c.adam_beta1;
    const double b2 = c.adam_beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step));
    auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      mw[l] = b1 * mw[l] + (1.0 - b1) * g.weights[l];
      vw[l] = b2 * vw[l] + (1.0 - b2) * g.weights[l].cwiseAbs2();
      layers[l].weights.array() -= c.step_size * (mw[l].array() / correction1) /
                                   ((vw[l].array() / correction2).sqrt() + c.adam_epsilon);
      if (layers[l].spec.has_bias) {
        mb[l] = b1 * mb[l] + (1.0 - b1) * g.bias[l];
        vb[l] = b2 * vb[l] + (1.0 - b2) * g.bias[l].cwiseAbs2();
        layers[l].bias.array() -= c.step_size * (mb[l].array() / correction1) /
                                  ((vb[l].array() / correction2).sqrt() + c.adam_epsilon);
      }
    }
  }
};

}  // namespace

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Gelu: return "gelu";
    case Activation::Selu: return "selu";
    case Activation::Swish: return "swish";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "identity" || lower == "linear" || lower == "none") return Activation::Identity;
  if (lower == "gelu") return Activation::Gelu;
  if (lower == "selu") return Activation::Selu;
  if (lower == "swish") return Activation::Swish;
  throw Error(Errc::Config, "unknown activation '" + std::string(name) + "'");
}

double activate(Activation a, double x) noexcept {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Gelu: return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    case Activation::Selu: return x >= 0.0 ? kSeluScale * x : kSeluNegativeScale * std::expm1(x);
    case Activation::Swish: return x * sigmoid(x);
  }
  return x;
}

double activate_derivative(Activation a, double x) noexcept {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Gelu: return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
    case Activation::Selu: return x >= 0.0 ? kSeluScale : kSeluNegativeScale * std::exp(x);
    case Activation::Swish: {
      const double s = sigmoid(x);
      return s + x * s * (1.0 - s);
    }
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// Network

Network::Network(const std::vector<LayerSpec>& specs) {
  for (const auto& spec : specs) {
    if (spec.input_size < 1 || spec.output_size < 1) throw Error(Errc::OutOfRange, "layer sizes must be >= 1");
    layers_.push_back({spec, Eigen::MatrixXd::Zero(spec.input_size, spec.output_size),
                       Eigen::VectorXd::Zero(spec.output_size)});
  }
  check_chain();
}

void Network::check_chain() const {
  for (std::size_t l = 1; l < layers_.size(); ++l) {
    if (layers_[l].spec.input_size != layers_[l - 1].spec.output_size) {
      throw Error(Errc::ShapeMismatch, "layer " + std::to_string(l) + " input size does not match previous output");
    }
  }
}

void Network::initialize(Rng& rng) {
  for (auto& layer : layers_) {
    const double limit = std::sqrt(6.0 / (layer.spec.input_size + layer.spec.output_size));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) layer.weights(i, j) = dist(rng);
    }
    layer.bias.setZero();
  }
}

int Network::input_size() const {
  if (layers_.empty()) throw Error(Errc::ShapeMismatch, "empty network");
  return layers_.front().spec.input_size;
}

int Network::output_size() const {
  if (layers_.empty()) throw Error(Errc::ShapeMismatch, "empty network");
  return layers_.back().spec.output_size;
}

ForwardCache Network::forward(const Eigen::MatrixXd& batch) const {
  if (batch.cols() != input_size()) {
    throw Error(Errc::ShapeMismatch, "batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                                         std::to_string(input_size()));
  }
  ForwardCache cache;
  cache.inputs.reserve(layers_.size());
  cache.pre_activations.reserve(layers_.size());
  Eigen::MatrixXd h = batch;
  for (const auto& layer : layers_) {
    Eigen::MatrixXd pre = h * layer.weights;
    if (layer.spec.has_bias) pre.rowwise() += layer.bias.transpose();
    cache.inputs.push_back(std::move(h));
    h = apply(layer.spec.activation, pre);
    cache.pre_activations.push_back(std::move(pre));
  }
  cache.output = std::move(h);
  return cache;
}

Eigen::MatrixXd Network::predict(const Eigen::MatrixXd& batch) const {
  if (batch.cols() != input_size()) throw Error(Errc::ShapeMismatch, "batch width does not match network input");
  Eigen::MatrixXd h = batch;
  for (const auto& layer : layers_) {
    Eigen::MatrixXd pre = h * layer.weights;
    if (layer.spec.has_bias) pre.rowwise() += layer.bias.transpose();
    h = apply(layer.spec.activation, pre);
  }
  return h;
}

Gradients Network::backward(const ForwardCache& cache, const Eigen::MatrixXd& output_gradient) const {
  Gradients g;
  g.weights.resize(layers_.size());
  g.bias.resize(layers_.size());
  Eigen::MatrixXd delta = output_gradient;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    if (layer.spec.activation != Activation::Identity) {
      delta = delta.cwiseProduct(apply_derivative(layer.spec.activation, cache.pre_activations[l]));
    }
    g.weights[l] = cache.inputs[l].transpose() * delta;
    g.bias[l] = layer.spec.has_bias ? Eigen::VectorXd(delta.colwise().sum().transpose())
                                    : Eigen::VectorXd::Zero(layer.bias.size());
    if (l > 0) delta = delta * layer.weights.transpose();
  }
  return g;
}

Eigen::Index Network::parameter_count() const {
  Eigen::Index count = 0;
  for (const auto& layer : layers_) count += layer.weights.size() + (layer.spec.has_bias ? layer.bias.size() : 0);
  return count;
}

Eigen::VectorXd Network::parameters() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index pos = 0;
  for (const auto& layer : layers_) {
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) flat(pos++) = layer.weights(i, j);
    }
    if (layer.spec.has_bias) {
      flat.segment(pos, layer.bias.size()) = layer.bias;
      pos += layer.bias.size();
    }
  }
  return flat;
}

void Network::set_parameters(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count()) throw Error(Errc::ShapeMismatch, "parameter vector has the wrong length");
  Eigen::Index pos = 0;
  for (auto& layer : layers_) {
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) layer.weights(i, j) = flat(pos++);
    }
    if (layer.spec.has_bias) {
      layer.bias = flat.segment(pos, layer.bias.size());
      pos += layer.bias.size();
    }
  }
}

Eigen::VectorXd Network::flatten(const Gradients& g) const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& w = g.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) flat(pos++) = w(i, j);
    }
    if (layers_[l].spec.has_bias) {
      flat.segment(pos, g.bias[l].size()) = g.bias[l];
      pos += g.bias[l].size();
    }
  }
  return flat;
}

double Network::weight_norm_squared() const {
  double total = 0.0;
  for (const auto& layer : layers_) total += layer.weights.squaredNorm();
  return total;
}

void Network::append(const Network& other) {
  layers_.insert(layers_.end(), other.layers_.begin(), other.layers_.end());
  check_chain();
}

Network Network::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > layers_.size()) throw Error(Errc::OutOfRange, "layer slice out of range");
  Network out;
  out.layers_.assign(layers_.begin() + static_cast<std::ptrdiff_t>(begin), layers_.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

// ---------------------------------------------------------------------------
// Loss and training

LossGradient loss_and_gradient(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                               double l2) {
  const ForwardCache cache = net.forward(inputs);
  if (cache.output.rows() != targets.rows() || cache.output.cols() != targets.cols()) {
    throw Error(Errc::ShapeMismatch, "targets do not match network output shape");
  }
  const Eigen::MatrixXd residual = cache.output - targets;
  const double count = static_cast<double>(residual.size());
  LossGradient out;
  out.mse = residual.squaredNorm() / count;
  out.loss = out.mse + l2 * net.weight_norm_squared();
  out.gradient = net.backward(cache, (2.0 / count) * residual);
  if (l2 != 0.0) {
    for (std::size_t l = 0; l < net.layers().size(); ++l) out.gradient.weights[l] += 2.0 * l2 * net.layers()[l].weights;
  }
  return out;
}

double mean_squared_error(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  const Eigen::MatrixXd out = net.predict(inputs);
  if (out.rows() != targets.rows() || out.cols() != targets.cols()) {
    throw Error(Errc::ShapeMismatch, "targets do not match network output shape");
  }
  return (out - targets).squaredNorm() / static_cast<double>(out.size());
}

void TrainConfig::validate() const {
  if (max_epochs < 1) throw Error(Errc::Config, "max_epochs must be >= 1");
  if (batch_size < 1) throw Error(Errc::Config, "batch_size must be >= 1");
  if (!(step_size > 0.0)) throw Error(Errc::Config, "step_size must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw Error(Errc::Config, "ADAM betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw Error(Errc::Config, "adam_epsilon must be positive");
  if (!(l2 >= 0.0)) throw Error(Errc::Config, "l2 must be non-negative");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw Error(Errc::Config, "validation_fraction must lie in [0, 1)");
  }
  if (patience < 0) throw Error(Errc::Config, "patience must be >= 0");
}

TrainResult train_network(Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                          const TrainConfig& config) {
  config.validate();
  if (inputs.rows() != targets.rows()) throw Error(Errc::ShapeMismatch, "inputs and targets differ in row count");
  if (!inputs.allFinite() || !targets.allFinite()) throw Error(Errc::NonFinite, "training data contains non-finite values");
  const Eigen::Index n = inputs.rows();
  const auto n_val = static_cast<Eigen::Index>(std::llround(static_cast<double>(n) * config.validation_fraction));
  const Eigen::Index n_train = n - n_val;
  if (n_train < 2 || (config.validation_fraction > 0.0 && n_val < 1)) {
    throw Error(Errc::InsufficientData, "too few rows (" + std::to_string(n) + ") for the requested split");
  }
  const bool has_val = n_val > 0;
  // Chronological split: the trailing rows validate.
  const Eigen::MatrixXd x_train = inputs.topRows(n_train);
  const Eigen::MatrixXd y_train = targets.topRows(n_train);
  const Eigen::MatrixXd x_val = inputs.bottomRows(n_val);
  const Eigen::MatrixXd y_val = targets.bottomRows(n_val);

  const auto batch = static_cast<std::size_t>(std::min<Eigen::Index>(config.batch_size, n_train));
  Rng rng(config.seed);
  AdamState adam(net);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_params = net.parameters();
  int since_best = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const auto xb = rows_of(x_train, order, start, stop);
      const auto yb = rows_of(y_train, order, start, stop);
      const LossGradient lg = loss_and_gradient(net, xb, yb, config.l2);
      if (!std::isfinite(lg.loss)) {
        throw Error(Errc::Divergence, "loss became non-finite in epoch " + std::to_string(epoch));
      }
      adam.update(net, lg.gradient, config);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = mean_squared_error(net, x_train, y_train);
    rec.train_loss = rec.train_mse + config.l2 * net.weight_norm_squared();
    rec.val_mse = has_val ? mean_squared_error(net, x_val, y_val) : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(rec.train_loss) || (has_val && !std::isfinite(rec.val_mse))) {
      throw Error(Errc::Divergence, "loss became non-finite in epoch " + std::to_string(epoch));
    }
    result.log.push_back(rec);

    if (has_val) {
      if (rec.val_mse < best_val) {
        best_val = rec.val_mse;
        best_params = net.parameters();
        result.best_epoch = epoch;
        since_best = 0;
      } else if (config.patience > 0 && ++since_best >= config.patience) {
        result.early_stopped = true;
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
  }
  if (has_val) net.set_parameters(best_params);

  result.train_mse = mean_squared_error(net, x_train, y_train);
  result.val_mse = has_val ? mean_squared_error(net, x_val, y_val) : std::numeric_limits<double>::quiet_NaN();
  result.full_mse = mean_squared_error(net, inputs, targets);
  return result;
}

void write_epoch_log(std::ostream& out, const std::vector<EpochRecord>& log) {
  out << "epoch,train_loss,train_mse,val_mse\n";
  for (const auto& r : log) {
    out << r.epoch << ',' << format_number(r.train_loss) << ',' << format_number(r.train_mse) << ','
        << (std::isnan(r.val_mse) ? std::string() : format_number(r.val_mse)) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Autoencoders

std::string Architecture::describe() const {
  std::ostringstream s;
  for (std::size_t i = 0; i < hidden.size(); ++i) s << (i ? " / " : "") << hidden[i] << " / " << to_string(activation);
  if (hidden.empty()) s << "linear";
  return s.str();
}

Network make_regressor(int input_size, int output_size, const Architecture& arch, Rng& rng) {
  std::vector<LayerSpec> specs;
  int width = input_size;
  for (const int h : arch.hidden) {
    specs.push_back({width, h, arch.activation, arch.has_bias});
    width = h;
  }
  specs.push_back({width, output_size, Activation::Identity, arch.has_bias});
  Network net(specs);
  net.initialize(rng);
  return net;
}

AeNetwork make_autoencoder(int input_size, int bottleneck, const Architecture& arch, Rng& rng) {
  if (bottleneck < 1 || input_size < 1) throw Error(Errc::OutOfRange, "autoencoder sizes must be >= 1");
  AeNetwork ae;
  ae.encoder = make_regressor(input_size, bottleneck, arch, rng);
  Architecture mirrored = arch;
  std::reverse(mirrored.hidden.begin(), mirrored.hidden.end());
  ae.decoder = make_regressor(bottleneck, input_size, mirrored, rng);
  return ae;
}

void AeNetwork::validate() const {
  if (encoder.empty() || decoder.empty()) throw Error(Errc::ShapeMismatch, "autoencoder needs encoder and decoder layers");
  if (encoder.output_size() != decoder.input_size()) {
    throw Error(Errc::ShapeMismatch, "encoder output size must equal decoder input size");
  }
  if (decoder.output_size() != encoder.input_size()) {
    throw Error(Errc::ShapeMismatch, "decoder output size must equal encoder input size");
  }
}

AeFit train(AeNetwork network, const Eigen::MatrixXd& data, const TrainConfig& config) {
  network.validate();
  Network chain = network.encoder;
  chain.append(network.decoder);
  AeFit fit;
  fit.result = train_network(chain, data, data, config);
  const std::size_t split = network.encoder.layers().size();
  fit.network.encoder = chain.slice(0, split);
  fit.network.decoder = chain.slice(split, chain.layers().size());
  return fit;
}

void ClusteredAe::validate() const {
  assignment.validate();
  if (static_cast<int>(encoders.size()) != assignment.clusters()) {
    throw Error(Errc::ShapeMismatch, "need one encoder per cluster");
  }
  for (int k = 0; k < clusters(); ++k) {
    const auto& enc = encoders[static_cast<std::size_t>(k)];
    if (enc.input_size() != static_cast<int>(assignment.members(k).size()) || enc.output_size() != 1) {
      throw Error(Errc::ShapeMismatch, "encoder " + std::to_string(k) + " must map the cluster's columns to one code");
    }
  }
  if (decoder.input_size() != clusters() || decoder.output_size() != static_cast<int>(assignment.labels.size())) {
    throw Error(Errc::ShapeMismatch, "joint decoder must map K codes to d outputs");
  }
}

Eigen::MatrixXd encode_clustered(const ClusteredAe& model, const Eigen::MatrixXd& rows) {
  if (rows.cols() != static_cast<Eigen::Index>(model.assignment.labels.size())) {
    throw Error(Errc::ShapeMismatch, "rows have " + std::to_string(rows.cols()) + " columns, model expects " +
                                         std::to_string(model.assignment.labels.size()));
  }
  Eigen::MatrixXd codes(rows.rows(), model.clusters());
  for (int k = 0; k < model.clusters(); ++k) {
    codes.col(k) = model.encoders[static_cast<std::size_t>(k)].predict(columns_of(rows, model.assignment.members(k)));
  }
  return codes;
}

Eigen::MatrixXd reconstruct_clustered(const ClusteredAe& model, const Eigen::MatrixXd& rows) {
  return model.decoder.predict(encode_clustered(model, rows));
}

ClusteredAeFit fit_clustered_ae(const Eigen::MatrixXd& data, const ClusterAssignment& assignment,
                                const Architecture& encoder_arch, const Architecture& decoder_arch,
                                const TrainConfig& config) {
  assignment.validate();
  if (data.cols() != static_cast<Eigen::Index>(assignment.labels.size())) {
    throw Error(Errc::ShapeMismatch, "assignment does not cover the panel's columns");
  }
  ClusteredAeFit fit;
  fit.model.assignment = assignment;
  for (int k = 0; k < assignment.clusters(); ++k) {
    const auto members = assignment.members(k);
    const Eigen::MatrixXd sub = columns_of(data, members);
    const std::string stream = "clustered-ae/encoder/" + std::to_string(k);
    Rng rng = make_rng(config.seed, stream + "/init");
    TrainConfig c = config;
    c.seed = derive_seed(config.seed, stream + "/train");
    AeFit ae = train(make_autoencoder(static_cast<int>(members.size()), 1, encoder_arch, rng), sub, c);

    // Orient the code to move with the cluster's mean column.
    const Eigen::VectorXd code = ae.network.encode(sub).col(0);
    const Eigen::VectorXd mean_col = sub.rowwise().mean();
    const double cov = (code.array() - code.mean()).matrix().dot((mean_col.array() - mean_col.mean()).matrix());
    if (cov < 0.0) {
      auto& last = ae.network.encoder.layers().back();
      last.weights *= -1.0;
      last.bias *= -1.0;
    }
    fit.model.encoders.push_back(std::move(ae.network.encoder));
    fit.encoder_results.push_back(std::move(ae.result));
  }

  const Eigen::MatrixXd codes = encode_clustered(fit.model, data);
  Rng rng = make_rng(config.seed, "clustered-ae/decoder/init");
  fit.model.decoder = make_regressor(assignment.clusters(), static_cast<int>(data.cols()), decoder_arch, rng);
  TrainConfig c = config;
  c.seed = derive_seed(config.seed, "clustered-ae/decoder/train");
  fit.decoder_result = train_network(fit.model.decoder, codes, data, c);
  fit.full_mse = fit.decoder_result.full_mse;
  return fit;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

json layers_json(const Network& net) {
  json layers = json::array();
  for (const auto& layer : net.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) w.push_back(layer.weights(i, j));
    }
    json entry = {{"input_size", layer.spec.input_size},
                  {"output_size", layer.spec.output_size},
                  {"activation", to_string(layer.spec.activation)},
                  {"has_bias", layer.spec.has_bias},
                  {"weights", w}};
    if (layer.spec.has_bias) entry["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back(std::move(entry));
  }
  return layers;
}

Network network_from_layers(const json& layers) {
  std::vector<LayerSpec> specs;
  for (const auto& entry : layers) {
    specs.push_back({entry.at("input_size").get<int>(), entry.at("output_size").get<int>(),
                     parse_activation(entry.at("activation").get<std::string>()), entry.at("has_bias").get<bool>()});
  }
  Network net(specs);
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const auto& entry = layers[l];
    const auto w = entry.at("weights").get<std::vector<double>>();
    auto& layer = net.layers()[l];
    if (static_cast<Eigen::Index>(w.size()) != layer.weights.size()) throw Error(Errc::Parse, "weight array has the wrong length");
    std::size_t pos = 0;
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) layer.weights(i, j) = w[pos++];
    }
    if (specs[l].has_bias) {
      const auto b = entry.at("bias").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(b.size()) != layer.bias.size()) throw Error(Errc::Parse, "bias array has the wrong length");
      layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), layer.bias.size());
    }
  }
  return net;
}

json document(std::string_view kind) {
  return {{"format", "riskagg-model"}, {"version", kModelFormatVersion}, {"kind", kind}};
}

json parse_document(std::string_view text, std::string_view kind) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::Parse, std::string("model JSON: ") + e.what());
  }
  if (doc.value("format", "") != "riskagg-model") throw Error(Errc::Parse, "not a riskagg model document");
  if (doc.value("version", 0) != kModelFormatVersion) throw Error(Errc::Parse, "unsupported model format version");
  if (doc.value("kind", "") != kind) throw Error(Errc::Parse, "expected model kind '" + std::string(kind) + "'");
  return doc;
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(Errc::Parse, std::string("model JSON: ") + e.what());
  }
}

}  // namespace

std::string network_to_json(const Network& net) {
  json doc = document("network");
  doc["layers"] = layers_json(net);
  return doc.dump(1);
}

Network network_from_json(std::string_view text) {
  const json doc = parse_document(text, "network");
  return guarded([&] { return network_from_layers(doc.at("layers")); });
}

std::string autoencoder_to_json(const AeNetwork& ae) {
  json doc = document("autoencoder");
  doc["bottleneck_size"] = ae.bottleneck_size();
  doc["encoder"] = layers_json(ae.encoder);
  doc["decoder"] = layers_json(ae.decoder);
  return doc.dump(1);
}

AeNetwork autoencoder_from_json(std::string_view text) {
  const json doc = parse_document(text, "autoencoder");
  return guarded([&] {
    AeNetwork ae{network_from_layers(doc.at("encoder")), network_from_layers(doc.at("decoder"))};
    ae.validate();
    return ae;
  });
}

std::string clustered_ae_to_json(const ClusteredAe& model) {
  json doc = document("clustered_autoencoder");
  doc["labels"] = model.assignment.labels;
  doc["cluster_of"] = model.assignment.cluster_of;
  doc["cluster_names"] = model.assignment.names;
  json encoders = json::array();
  for (const auto& enc : model.encoders) encoders.push_back(layers_json(enc));
  doc["encoders"] = std::move(encoders);
  doc["decoder"] = layers_json(model.decoder);
  return doc.dump(1);
}

ClusteredAe clustered_ae_from_json(std::string_view text) {
  const json doc = parse_document(text, "clustered_autoencoder");
  return guarded([&] {
    ClusteredAe model;
    model.assignment.labels = doc.at("labels").get<std::vector<std::string>>();
    model.assignment.cluster_of = doc.at("cluster_of").get<std::vector<int>>();
    model.assignment.names = doc.at("cluster_names").get<std::vector<std::string>>();
    for (const auto& enc : doc.at("encoders")) model.encoders.push_back(network_from_layers(enc));
    model.decoder = network_from_layers(doc.at("decoder"));
    model.validate();
    return model;
  });
}

}  // namespace riskagg
