#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "riskagg/cluster.hpp"
#include "riskagg/random.hpp"

namespace riskagg {

enum class Activation { Identity, Gelu, Selu, Swish };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

// SELU with the rounded constants 1.0507 (scale) and 1.7581 (scale * alpha).
inline constexpr double kSeluScale = 1.0507;
inline constexpr double kSeluNegativeScale = 1.7581;

double activate(Activation a, double x) noexcept;
double activate_derivative(Activation a, double x) noexcept;

struct LayerSpec {
  int input_size = 1;
  int output_size = 1;
  Activation activation = Activation::Identity;
  bool has_bias = true;
};

/// h = g(W' x + b), with W stored as input_size x output_size. Batches are
/// row-major in the sense of one observation per row: H = g(X W + 1 b').
struct DenseLayer {
  LayerSpec spec;
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre_activations;
  Eigen::MatrixXd output;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
};

/// Sequential stack of dense layers.
class Network {
 public:
  Network() = default;
  /// Zero-initialized parameters.
  explicit Network(const std::vector<LayerSpec>& specs);

  /// Uniform in +-sqrt(6 / (fan_in + fan_out)); biases zero.
  void initialize(Rng& rng);

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  bool empty() const noexcept { return layers_.empty(); }
  int input_size() const;
  int output_size() const;

  ForwardCache forward(const Eigen::MatrixXd& batch) const;
  Eigen::MatrixXd predict(const Eigen::MatrixXd& batch) const;
  Gradients backward(const ForwardCache& cache, const Eigen::MatrixXd& output_gradient) const;

  Eigen::Index parameter_count() const;
  /// Layer by layer: weights in row-major order, then biases (if any).
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);
  Eigen::VectorXd flatten(const Gradients& g) const;
  /// Sum of squared weights (biases excluded), the L2 penalty base.
  double weight_norm_squared() const;

  /// Appends `other`'s layers; output of this must match input of other.
  void append(const Network& other);
  Network slice(std::size_t begin, std::size_t end) const;

 private:
  void check_chain() const;
  std::vector<DenseLayer> layers_;
};

/// Loss = mean squared error over all entries + l2 * sum of squared weights.
struct LossGradient {
  double loss = 0.0;
  double mse = 0.0;
  Gradients gradient;
};

LossGradient loss_and_gradient(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                               double l2);
double mean_squared_error(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);

struct TrainConfig {
  int max_epochs = 500;
  /// Clamped to the number of training rows.
  int batch_size = 64;
  double step_size = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double l2 = 0.0;
  /// Trailing fraction of rows held out for validation and early stopping.
  /// Zero trains on every row without early stopping.
  double validation_fraction = 0.2;
  /// Epochs without validation improvement before stopping; 0 disables.
  int patience = 25;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_mse = 0.0;
  /// NaN when there is no validation split.
  double val_mse = 0.0;
};

struct TrainResult {
  double train_mse = 0.0;
  double val_mse = 0.0;
  /// MSE of the returned network on every row.
  double full_mse = 0.0;
  int best_epoch = 0;
  bool early_stopped = false;
  std::vector<EpochRecord> log;
};

/// ADAM on minibatches drawn from a seeded shuffle. With a validation split
/// the weights of the best validation epoch are restored at the end.
TrainResult train_network(Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                          const TrainConfig& config);

void write_epoch_log(std::ostream& out, const std::vector<EpochRecord>& log);

/// Hidden layer widths for an encoder (the decoder mirrors them). The
/// bottleneck and output layers are always linear.
struct Architecture {
  std::vector<int> hidden;
  Activation activation = Activation::Identity;
  bool has_bias = true;

  std::string describe() const;
};

struct AeNetwork {
  Network encoder;
  Network decoder;

  int input_size() const { return encoder.input_size(); }
  int bottleneck_size() const { return encoder.output_size(); }
  void validate() const;
  Eigen::MatrixXd encode(const Eigen::MatrixXd& rows) const { return encoder.predict(rows); }
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& rows) const { return decoder.predict(encoder.predict(rows)); }
};

/// encoder: input -> hidden... (act) -> bottleneck (linear);
/// decoder: bottleneck -> reversed hidden... (act) -> input (linear).
AeNetwork make_autoencoder(int input_size, int bottleneck, const Architecture& arch, Rng& rng);

/// Network mapping `input_size` -> hidden... (act) -> `output_size` (linear).
Network make_regressor(int input_size, int output_size, const Architecture& arch, Rng& rng);

struct AeFit {
  AeNetwork network;
  TrainResult result;
};

/// Trains the autoencoder to reconstruct `data` (standardized rows).
AeFit train(AeNetwork network, const Eigen::MatrixXd& data, const TrainConfig& config);

/// Per-cluster encoders with bottleneck one feeding a joint decoder.
struct ClusteredAe {
  std::vector<Network> encoders;
  Network decoder;
  ClusterAssignment assignment;

  int clusters() const noexcept { return static_cast<int>(encoders.size()); }
  int output_size() const { return decoder.output_size(); }
  void validate() const;
};

struct ClusteredAeFit {
  ClusteredAe model;
  std::vector<TrainResult> encoder_results;
  TrainResult decoder_result;
  double full_mse = 0.0;
};

/// Phase 1 trains one autoencoder per cluster (bottleneck one) and keeps its
/// encoder, oriented so the code correlates non-negatively with the cluster's
/// mean column. Phase 2 freezes the encoders and trains the joint decoder
/// from the K codes to all d columns. Seeds derive from `config.seed`.
ClusteredAeFit fit_clustered_ae(const Eigen::MatrixXd& data, const ClusterAssignment& assignment,
                                const Architecture& encoder_arch, const Architecture& decoder_arch,
                                const TrainConfig& config);

/// n x K codes; column k is encoder k applied to cluster k's columns.
Eigen::MatrixXd encode_clustered(const ClusteredAe& model, const Eigen::MatrixXd& rows);
Eigen::MatrixXd reconstruct_clustered(const ClusteredAe& model, const Eigen::MatrixXd& rows);

/// Self-describing JSON documents (format name, version, layer specs,
/// row-major weights).
inline constexpr int kModelFormatVersion = 1;
std::string network_to_json(const Network& net);
Network network_from_json(std::string_view text);
std::string autoencoder_to_json(const AeNetwork& ae);
AeNetwork autoencoder_from_json(std::string_view text);
std::string clustered_ae_to_json(const ClusteredAe& model);
ClusteredAe clustered_ae_from_json(std::string_view text);

}  // namespace riskagg
