#include "vitcod/autoencoder.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vitcod/errors.hpp"
#include "vitcod/rng.hpp"

namespace vitcod {

namespace {

using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// h x (n * d_k) view of the head tensor.
Eigen::Map<const RowMat> unfold(const HeadTensor& x) {
  return {x.data().data(), static_cast<Eigen::Index>(x.heads()),
          static_cast<Eigen::Index>(x.tokens() * x.head_dim())};
}

Mat enc_matrix(const AeModule& ae) {
  return Eigen::Map<const RowMat>(ae.w_enc.data(), static_cast<Eigen::Index>(ae.h),
                                  static_cast<Eigen::Index>(ae.h_c));
}

Mat dec_matrix(const AeModule& ae) {
  return Eigen::Map<const RowMat>(ae.w_dec.data(), static_cast<Eigen::Index>(ae.h_c),
                                  static_cast<Eigen::Index>(ae.h));
}

AeModule module_from(const Mat& enc, const Mat& dec) {
  AeModule ae;
  ae.h = static_cast<std::size_t>(enc.rows());
  ae.h_c = static_cast<std::size_t>(enc.cols());
  ae.w_enc.resize(ae.h * ae.h_c);
  ae.w_dec.resize(ae.h_c * ae.h);
  Eigen::Map<RowMat>(ae.w_enc.data(), enc.rows(), enc.cols()) = enc;
  Eigen::Map<RowMat>(ae.w_dec.data(), dec.rows(), dec.cols()) = dec;
  return ae;
}

// Second-moment statistics of one stream: sum of x x^T over every
// (token, feature) column, and the element count h * columns.
struct Moments {
  Mat cov;
  double elements = 0.0;

  Moments& operator+=(const Moments& o) {
    cov += o.cov;
    elements += o.elements;
    return *this;
  }
};

Moments moments_of(const HeadTensor& x) {
  const auto m = unfold(x);
  return {m * m.transpose(), static_cast<double>(x.size())};
}

// MSE of the reconstruction x' = dec^T enc^T x given the moments.
double moment_loss(const Moments& mo, const Mat& enc, const Mat& dec) {
  if (mo.elements == 0.0) return 0.0;
  const Mat residual = Mat::Identity(enc.rows(), enc.rows()) - dec.transpose() * enc.transpose();
  return (residual * mo.cov * residual.transpose()).trace() / mo.elements;
}

struct Grad {
  Mat enc;
  Mat dec;
};

Grad moment_grad(const Moments& mo, const Mat& enc, const Mat& dec) {
  const Mat a = dec.transpose();  // h x h_c
  const Mat b = enc.transpose();  // h_c x h
  const Mat residual = Mat::Identity(enc.rows(), enc.rows()) - a * b;
  const Mat g_w = (-2.0 / mo.elements) * residual * mo.cov;  // dL/dW, W = a b
  return {(a.transpose() * g_w).transpose(), (g_w * b.transpose()).transpose()};
}

void check_samples(std::span<const QkSample> samples) {
  if (samples.empty()) throw ArgumentError("autoencoder: need at least one sample");
  const auto& ref = samples.front().q;
  for (const auto& s : samples) {
    for (const HeadTensor* t : {&s.q, &s.k}) {
      if (t->heads() != ref.heads() || t->head_dim() != ref.head_dim() ||
          t->tokens() != ref.tokens()) {
        throw ShapeError("autoencoder: samples have inconsistent shapes");
      }
    }
  }
}

Mat top_eigenvectors(const Mat& cov, std::size_t h_c) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(cov);
  // Eigenvalues come out ascending; keep the last h_c columns, largest first.
  const auto h = cov.rows();
  Mat basis(h, static_cast<Eigen::Index>(h_c));
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(h_c); ++j) {
    basis.col(j) = solver.eigenvectors().col(h - 1 - j);
  }
  return basis;
}

}  // namespace

HeadTensor::HeadTensor(std::size_t h, std::size_t n, std::size_t d_k, std::vector<double> data)
    : h_(h), n_(n), d_k_(d_k), data_(std::move(data)) {
  if (h_ == 0 || n_ == 0 || d_k_ == 0) throw ShapeError("head tensor dimensions must be positive");
  if (data_.size() != h_ * n_ * d_k_) throw ShapeError("head tensor data length mismatch");
  for (double v : data_) {
    if (!std::isfinite(v)) throw DomainError("head tensor contains a non-finite entry");
  }
}

HeadTensor HeadTensor::zeros(std::size_t h, std::size_t n, std::size_t d_k) {
  return HeadTensor(h, n, d_k, std::vector<double>(h * n * d_k, 0.0));
}

void AeModule::validate() const {
  if (h_c < 1 || h_c > h) {
    throw ArgumentError("autoencoder: need 1 <= h_c <= h (h=" + std::to_string(h) +
                        ", h_c=" + std::to_string(h_c) + ")");
  }
  if (w_enc.size() != h * h_c || w_dec.size() != h_c * h) {
    throw ShapeError("autoencoder: weight sizes do not match h x h_c");
  }
  for (double v : w_enc) {
    if (!std::isfinite(v)) throw DomainError("autoencoder: non-finite encoder weight");
  }
  for (double v : w_dec) {
    if (!std::isfinite(v)) throw DomainError("autoencoder: non-finite decoder weight");
  }
}

std::size_t compressed_heads(std::size_t h, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ArgumentError("compression ratio must be in (0, 1]");
  const auto h_c = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(h)));
  return std::clamp<std::size_t>(h_c, 1, h);
}

HeadTensor encode(const HeadTensor& x, const AeModule& ae) {
  if (x.heads() != ae.h) {
    throw ShapeError("encode: tensor has " + std::to_string(x.heads()) + " heads, module expects " +
                     std::to_string(ae.h));
  }
  auto out = HeadTensor::zeros(ae.h_c, x.tokens(), x.head_dim());
  Eigen::Map<RowMat>(out.data().data(), static_cast<Eigen::Index>(ae.h_c),
                     static_cast<Eigen::Index>(x.tokens() * x.head_dim())) =
      enc_matrix(ae).transpose() * unfold(x);
  return out;
}

HeadTensor decode(const HeadTensor& xc, const AeModule& ae) {
  if (xc.heads() != ae.h_c) {
    throw ShapeError("decode: tensor has " + std::to_string(xc.heads()) +
                     " heads, module expects " + std::to_string(ae.h_c));
  }
  auto out = HeadTensor::zeros(ae.h, xc.tokens(), xc.head_dim());
  Eigen::Map<RowMat>(out.data().data(), static_cast<Eigen::Index>(ae.h),
                     static_cast<Eigen::Index>(xc.tokens() * xc.head_dim())) =
      dec_matrix(ae).transpose() * unfold(xc);
  return out;
}

double reconstruction_error(const HeadTensor& x, const HeadTensor& x_rec) {
  if (x.heads() != x_rec.heads() || x.tokens() != x_rec.tokens() ||
      x.head_dim() != x_rec.head_dim()) {
    throw ShapeError("reconstruction_error: shape mismatch");
  }
  const auto a = x.data(), b = x_rec.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

double qk_reconstruction_loss(std::span<const QkSample> samples, const AeModule& q,
                              const AeModule& k) {
  check_samples(samples);
  double sq = 0.0, sk = 0.0, count = 0.0;
  for (const auto& s : samples) {
    sq += reconstruction_error(s.q, decode(encode(s.q, q), q)) * static_cast<double>(s.q.size());
    sk += reconstruction_error(s.k, decode(encode(s.k, k), k)) * static_cast<double>(s.k.size());
    count += static_cast<double>(s.q.size());
  }
  return (sq + sk) / count;
}

TrainResult train_ae(std::span<const QkSample> samples, std::size_t h_c, const TrainConfig& cfg) {
  check_samples(samples);
  if (cfg.epochs == 0) throw ArgumentError("train_ae: epochs must be positive");
  if (!(cfg.learning_rate > 0.0)) throw ArgumentError("train_ae: learning rate must be positive");
  if (!(cfg.lambda_recon > 0.0)) throw ArgumentError("train_ae: lambda_recon must be positive");
  const std::size_t h = samples.front().q.heads();
  if (h_c < 1 || h_c > h) throw ArgumentError("train_ae: need 1 <= h_c <= h");

  const auto hi = static_cast<Eigen::Index>(h);
  const auto ci = static_cast<Eigen::Index>(h_c);
  std::vector<Moments> mq, mk;
  mq.reserve(samples.size());
  mk.reserve(samples.size());
  for (const auto& s : samples) {
    mq.push_back(moments_of(s.q));
    mk.push_back(moments_of(s.k));
  }
  auto total = [&](const std::vector<Moments>& ms, std::span<const std::size_t> idx) {
    Moments acc{Mat::Zero(hi, hi), 0.0};
    for (auto i : idx) acc += ms[i];
    return acc;
  };
  std::vector<std::size_t> all(samples.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Moments full_q = total(mq, all), full_k = total(mk, all);

  Rng rng(cfg.seed);
  Mat enc_q(hi, ci), dec_q(ci, hi);
  if (cfg.identity_init) {
    enc_q = Mat::Identity(hi, ci);
    dec_q = Mat::Identity(ci, hi);
  } else {
    const double bound = 1.0 / std::sqrt(static_cast<double>(h));
    for (Eigen::Index i = 0; i < hi; ++i)
      for (Eigen::Index j = 0; j < ci; ++j) enc_q(i, j) = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < ci; ++i)
      for (Eigen::Index j = 0; j < hi; ++j) dec_q(i, j) = rng.uniform(-bound, bound);
  }
  Mat enc_k = enc_q, dec_k = dec_q;
  if (!cfg.identity_init && !cfg.shared) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(h));
    for (Eigen::Index i = 0; i < hi; ++i)
      for (Eigen::Index j = 0; j < ci; ++j) enc_k(i, j) = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < ci; ++i)
      for (Eigen::Index j = 0; j < hi; ++j) dec_k(i, j) = rng.uniform(-bound, bound);
  }

  auto objective = [&] {
    return cfg.lambda_recon * (moment_loss(full_q, enc_q, dec_q) + moment_loss(full_k, enc_k, dec_k));
  };

  TrainResult result;
  result.losses.reserve(cfg.epochs + 1);
  const double initial = objective();
  const double blowup = 1e6 * std::max(initial, 1e-300);
  result.losses.push_back(initial);

  const std::size_t batch = cfg.batch_size == 0 ? samples.size() : std::min(cfg.batch_size, samples.size());
  std::vector<std::size_t> order = all;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < samples.size()) {
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(batch, order.size() - start));
      const Moments bq = batch == samples.size() ? full_q : total(mq, idx);
      const Moments bk = batch == samples.size() ? full_k : total(mk, idx);
      // The Q and K terms are normalised separately, as in the objective.
      Grad gq = moment_grad(bq, enc_q, dec_q);
      Grad gk = moment_grad(bk, enc_k, dec_k);
      const double step = cfg.learning_rate * cfg.lambda_recon;
      if (cfg.shared) {
        enc_q -= step * (gq.enc + gk.enc);
        dec_q -= step * (gq.dec + gk.dec);
        enc_k = enc_q;
        dec_k = dec_q;
      } else {
        enc_q -= step * gq.enc;
        dec_q -= step * gq.dec;
        enc_k -= step * gk.enc;
        dec_k -= step * gk.dec;
      }
    }
    const double loss = objective();
    if (!std::isfinite(loss) || loss > blowup) {
      throw DivergenceError("train_ae diverged at epoch " + std::to_string(epoch + 1) +
                            " (loss " + std::to_string(loss) + "); try a smaller learning rate");
    }
    result.losses.push_back(loss);
  }
  result.q = module_from(enc_q, dec_q);
  result.k = module_from(enc_k, dec_k);
  return result;
}

AeModule optimal_ae(std::span<const HeadTensor> tensors, std::size_t h_c) {
  if (tensors.empty()) throw ArgumentError("optimal_ae: need at least one tensor");
  const std::size_t h = tensors.front().heads();
  if (h_c < 1 || h_c > h) throw ArgumentError("optimal_ae: need 1 <= h_c <= h");
  const auto hi = static_cast<Eigen::Index>(h);
  Mat cov = Mat::Zero(hi, hi);
  for (const auto& t : tensors) {
    if (t.heads() != h) throw ShapeError("optimal_ae: inconsistent head counts");
    cov += moments_of(t).cov;
  }
  if (cov.isZero(0.0)) {
    return module_from(Mat::Zero(hi, static_cast<Eigen::Index>(h_c)),
                       Mat::Zero(static_cast<Eigen::Index>(h_c), hi));
  }
  const Mat basis = top_eigenvectors(cov, h_c);
  return module_from(basis, basis.transpose());
}

OptimalPair optimal_ae(std::span<const QkSample> samples, std::size_t h_c, bool shared) {
  check_samples(samples);
  std::vector<HeadTensor> qs, ks;
  for (const auto& s : samples) {
    qs.push_back(s.q);
    ks.push_back(s.k);
  }
  if (shared) {
    // One subspace for both streams: the objective weights them equally.
    std::vector<HeadTensor> both = qs;
    both.insert(both.end(), ks.begin(), ks.end());
    const auto m = optimal_ae(both, h_c);
    return {m, m};
  }
  return {optimal_ae(qs, h_c), optimal_ae(ks, h_c)};
}

std::vector<QkSample> make_mixture_samples(std::size_t count, std::size_t h, std::size_t h_c,
                                           std::size_t n, std::size_t d_k, double noise,
                                           std::uint64_t seed) {
  if (h_c < 1 || h_c > h) throw ArgumentError("mixture samples: need 1 <= h_c <= h");
  Rng rng(seed);
  auto mixing = [&] {
    Mat mix(static_cast<Eigen::Index>(h - h_c), static_cast<Eigen::Index>(h_c));
    for (Eigen::Index i = 0; i < mix.rows(); ++i)
      for (Eigen::Index j = 0; j < mix.cols(); ++j) mix(i, j) = rng.normal();
    return mix;
  };
  const Mat mix_q = mixing(), mix_k = mixing();
  auto draw = [&](const Mat& mix) {
    auto t = HeadTensor::zeros(h, n, d_k);
    const auto cols = static_cast<Eigen::Index>(n * d_k);
    Eigen::Map<RowMat> m(t.data().data(), static_cast<Eigen::Index>(h), cols);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(h_c); ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    if (h > h_c) m.bottomRows(static_cast<Eigen::Index>(h - h_c)) = mix * m.topRows(static_cast<Eigen::Index>(h_c));
    if (noise > 0.0) {
      for (auto& v : t.data()) v += noise * rng.normal();
    }
    return t;
  };
  std::vector<QkSample> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    auto q = draw(mix_q);
    auto k = draw(mix_k);
    out.push_back({std::move(q), std::move(k)});
  }
  return out;
}

}  // namespace vitcod
