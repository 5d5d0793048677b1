#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace vitcod {

// Per-head Q or K activations: h heads x n tokens x d_k features, row-major.
class HeadTensor {
 public:
  HeadTensor() = default;
  HeadTensor(std::size_t h, std::size_t n, std::size_t d_k, std::vector<double> data);
  static HeadTensor zeros(std::size_t h, std::size_t n, std::size_t d_k);

  std::size_t heads() const { return h_; }
  std::size_t tokens() const { return n_; }
  std::size_t head_dim() const { return d_k_; }
  std::size_t size() const { return data_.size(); }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  double at(std::size_t head, std::size_t token, std::size_t f) const {
    return data_[(head * n_ + token) * d_k_ + f];
  }
  double& at(std::size_t head, std::size_t token, std::size_t f) {
    return data_[(head * n_ + token) * d_k_ + f];
  }

 private:
  std::size_t h_ = 0, n_ = 0, d_k_ = 0;
  std::vector<double> data_;
};

// Linear compressor along the head axis: h heads -> h_c heads -> h heads.
struct AeModule {
  std::size_t h = 0;
  std::size_t h_c = 0;
  std::vector<double> w_enc;  // h x h_c, row-major
  std::vector<double> w_dec;  // h_c x h, row-major

  double enc(std::size_t head, std::size_t code) const { return w_enc[head * h_c + code]; }
  double dec(std::size_t code, std::size_t head) const { return w_dec[code * h + head]; }

  // Throws ArgumentError / DomainError when the invariants do not hold.
  void validate() const;
};

// h_c = round(ratio * h), clamped to [1, h].
std::size_t compressed_heads(std::size_t h, double ratio);

HeadTensor encode(const HeadTensor& x, const AeModule& ae);
HeadTensor decode(const HeadTensor& xc, const AeModule& ae);

// Mean squared error over all elements.
double reconstruction_error(const HeadTensor& x, const HeadTensor& x_rec);

struct QkSample {
  HeadTensor q;
  HeadTensor k;
};

struct TrainConfig {
  std::size_t epochs = 2000;
  double learning_rate = 0.05;
  std::size_t batch_size = 0;  // samples per step; 0 = full batch
  std::uint64_t seed = 0;
  double lambda_recon = 1.0;
  bool shared = false;         // one module for both Q and K
  bool identity_init = false;  // start from the head selector instead of random
};

struct TrainResult {
  AeModule q;
  AeModule k;
  // losses[e] is the objective before epoch e; losses.back() is the final value.
  std::vector<double> losses;
};

// Gradient descent on lambda * (MSE(Q, Q') + MSE(K, K')).
TrainResult train_ae(std::span<const QkSample> samples, std::size_t h_c, const TrainConfig& cfg);

// Best rank-h_c linear autoencoder for one stream (top eigenvectors of the
// head covariance). All-zero input gives the zero module.
AeModule optimal_ae(std::span<const HeadTensor> tensors, std::size_t h_c);

struct OptimalPair {
  AeModule q;
  AeModule k;
};
OptimalPair optimal_ae(std::span<const QkSample> samples, std::size_t h_c, bool shared = false);

// Objective of train_ae evaluated for the given modules (without lambda).
double qk_reconstruction_loss(std::span<const QkSample> samples, const AeModule& q,
                              const AeModule& k);

// Synthetic data: heads [0, h_c) are i.i.d. N(0,1), heads [h_c, h) are fixed
// random linear mixtures of them, then N(0, noise^2) is added everywhere.
std::vector<QkSample> make_mixture_samples(std::size_t count, std::size_t h, std::size_t h_c,
                                           std::size_t n, std::size_t d_k, double noise,
                                           std::uint64_t seed);

}  // namespace vitcod
