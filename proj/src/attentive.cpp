#include "m2m/attentive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "m2m/errors.hpp"
#include "m2m/rng.hpp"

namespace m2m {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {
constexpr double kBnEps = 1e-5;
}

// ---- sparsemax ----------------------------------------------------------------

VectorXd sparsemax(const VectorXd& z) {
  require(z.size() >= 1, "NonFiniteInput", "sparsemax needs at least one coordinate");
  require(z.allFinite(), "NonFiniteInput", "sparsemax input must be finite");
  const Eigen::Index d = z.size();
  std::vector<double> sorted(z.data(), z.data() + d);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumulative = 0.0;
  double tau = 0.0;
  int support = 0;
  for (Eigen::Index k = 0; k < d; ++k) {
    cumulative += sorted[static_cast<std::size_t>(k)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] > candidate) {
      tau = candidate;
      support = static_cast<int>(k) + 1;
    }
  }
  (void)support;
  return (z.array() - tau).cwiseMax(0.0);
}

MatrixXd sparsemax_rows(const MatrixXd& z) {
  MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    out.row(i) = sparsemax(z.row(i).transpose()).transpose();
  }
  return out;
}

VectorXd sparsemax_backward(const VectorXd& output, const VectorXd& grad) {
  const Eigen::Index d = output.size();
  double sum = 0.0;
  int support = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (output(i) > 0.0) {
      sum += grad(i);
      ++support;
    }
  }
  VectorXd out = VectorXd::Zero(d);
  if (support == 0) return out;
  const double mean = sum / support;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (output(i) > 0.0) out(i) = grad(i) - mean;
  }
  return out;
}

MatrixXd sparsemax_backward_rows(const MatrixXd& output, const MatrixXd& grad) {
  MatrixXd out(output.rows(), output.cols());
  for (Eigen::Index i = 0; i < output.rows(); ++i) {
    out.row(i) = sparsemax_backward(output.row(i).transpose(), grad.row(i).transpose()).transpose();
  }
  return out;
}

MatrixXd update_prior(const MatrixXd& prior, const MatrixXd& mask, double gamma) {
  require(prior.rows() == mask.rows() && prior.cols() == mask.cols(), "ShapeMismatch",
          "prior and mask shapes differ");
  require(gamma >= 1.0, "InvalidHyperparameter", "gamma must be at least 1");
  return prior.array() * (gamma - mask.array());
}

Eigen::MatrixXd aggregate_masks(const std::vector<MatrixXd>& masks, const MatrixXd& etas,
                                MaskAggregate variant) {
  require(!masks.empty(), "ZeroDenominator", "no masks to aggregate");
  const Eigen::Index b = masks[0].rows();
  const Eigen::Index d = masks[0].cols();
  require(etas.rows() == b && etas.cols() == static_cast<Eigen::Index>(masks.size()),
          "ShapeMismatch", "etas must be batch x n_steps");
  require((etas.array() >= 0.0).all(), "InvalidHyperparameter", "etas must be non-negative");

  MatrixXd numerator = MatrixXd::Zero(b, d);
  VectorXd denominator = VectorXd::Zero(b);
  for (std::size_t s = 0; s < masks.size(); ++s) {
    const auto eta = etas.col(static_cast<Eigen::Index>(s));
    numerator += eta.asDiagonal() * masks[s];
    const MatrixXd weighted = variant == MaskAggregate::paper
                                  ? MatrixXd(masks[s].array().square())
                                  : masks[s];
    denominator += (eta.asDiagonal() * weighted).rowwise().sum();
  }
  MatrixXd out(b, d);
  for (Eigen::Index i = 0; i < b; ++i) {
    require(denominator(i) > 0.0, "ZeroDenominator",
            "all masks are zero for batch row " + std::to_string(i));
    out.row(i) = numerator.row(i) / denominator(i);
  }
  return out;
}

// ---- config ---------------------------------------------------------------------

void AttentiveConfig::validate() const {
  require(n_steps >= 1, "InvalidHyperparameter", "n_steps must be at least 1");
  require(gamma >= 1.0, "InvalidHyperparameter", "gamma must be at least 1");
  require(hidden_dim >= 1, "InvalidHyperparameter", "hidden_dim must be at least 1");
  require(learning_rate > 0.0, "InvalidHyperparameter", "learning_rate must be positive");
  require(batch_size >= 2, "InvalidHyperparameter", "batch_size must be at least 2");
  require(epochs >= 1, "InvalidHyperparameter", "epochs must be at least 1");
}

// ---- caches ----------------------------------------------------------------------

struct AttentiveModel::BnCache {
  MatrixXd xhat;
  RowVectorXd invstd;
};

struct AttentiveModel::GluLayerCache {
  MatrixXd in;
  BnCache bnz, bng;
  MatrixXd sig;
};

struct AttentiveModel::GluStackCache {
  GluLayerCache l1, l2;
};

struct AttentiveModel::StepCache {
  MatrixXd aprev;
  BnCache bn_att;
  MatrixXd logits;
  MatrixXd prior;
  MatrixXd mask;
  MatrixXd xm;
  GluStackCache glu;
  MatrixXd o;
};

struct AttentiveModel::ForwardCache {
  GluStackCache glu0;
  MatrixXd a0;
  std::vector<StepCache> steps;
  MatrixXd sagg;
  MatrixXd yhat;
};

struct AttentiveModel::Gradients {
  std::vector<MatrixXd> g;

  explicit Gradients(const std::vector<MatrixXd>& params) {
    g.reserve(params.size());
    for (const auto& p : params) g.push_back(MatrixXd::Zero(p.rows(), p.cols()));
  }
};

// ---- batch standardization ---------------------------------------------------------

static MatrixXd bn_batch(const MatrixXd& x, RowVectorXd* mean_out, RowVectorXd* invstd_out) {
  const double b = static_cast<double>(x.rows());
  const RowVectorXd mean = x.colwise().mean();
  const MatrixXd centered = x.rowwise() - mean;
  const RowVectorXd var = centered.array().square().colwise().sum() / b;
  const RowVectorXd invstd = (var.array() + kBnEps).rsqrt();
  if (mean_out) *mean_out = mean;
  if (invstd_out) *invstd_out = invstd;
  return centered.array().rowwise() * invstd.array();
}

static MatrixXd bn_backward(const MatrixXd& dy, const MatrixXd& xhat, const RowVectorXd& invstd) {
  const double b = static_cast<double>(dy.rows());
  const RowVectorXd mean_dy = dy.colwise().sum() / b;
  const RowVectorXd mean_dy_xhat = (dy.array() * xhat.array()).colwise().sum() / b;
  MatrixXd dx = dy;
  dx.rowwise() -= mean_dy;
  dx.array() -= xhat.array().rowwise() * mean_dy_xhat.array();
  dx.array().rowwise() *= invstd.array();
  return dx;
}

// ---- parameter management -----------------------------------------------------------

void AttentiveModel::init_parameters(std::uint64_t seed) {
  const int s_count = config_.n_steps;
  const int h = config_.hidden_dim;
  params_.clear();
  params_.reserve(static_cast<std::size_t>(10 + 2 * s_count));
  auto push = [&](Eigen::Index rows, Eigen::Index cols) {
    params_.emplace_back(MatrixXd::Zero(rows, cols));
  };
  push(d_in_, h);  // glu1 wz
  push(1, h);      // glu1 bz
  push(d_in_, h);  // glu1 wg
  push(1, h);      // glu1 bg
  push(h, h);      // glu2 wz
  push(1, h);      // glu2 bz
  push(h, h);      // glu2 wg
  push(1, h);      // glu2 bg
  for (int s = 0; s < s_count; ++s) {
    push(h, d_in_);  // attention weights
    push(1, d_in_);  // attention bias
  }
  push(h, t_out_);  // head weights
  push(1, t_out_);  // head bias

  Rng rng(seed);
  for (std::size_t p = 0; p < params_.size(); ++p) {
    if (params_[p].rows() == 1) continue;  // biases start at zero
    const double scale = 0.5 / std::sqrt(static_cast<double>(params_[p].rows()));
    for (Eigen::Index i = 0; i < params_[p].rows(); ++i) {
      for (Eigen::Index j = 0; j < params_[p].cols(); ++j) {
        params_[p](i, j) = rng.normal(0.0, scale);
      }
    }
  }

  bn_sites_.assign(static_cast<std::size_t>(4 * (s_count + 1) + s_count), BnSite{});
  for (int slot = 0; slot <= s_count; ++slot) {
    for (int which = 0; which < 4; ++which) {
      auto& site = bn_sites_[static_cast<std::size_t>(slot_site(slot, which))];
      site.mean = RowVectorXd::Zero(h);
      site.var = RowVectorXd::Ones(h);
    }
  }
  for (int s = 0; s < s_count; ++s) {
    auto& site = bn_sites_[static_cast<std::size_t>(att_site(s))];
    site.mean = RowVectorXd::Zero(d_in_);
    site.var = RowVectorXd::Ones(d_in_);
  }
}

VectorXd AttentiveModel::pack_parameters() const {
  Eigen::Index total = 0;
  for (const auto& p : params_) total += p.size();
  VectorXd flat(total);
  Eigen::Index at = 0;
  for (const auto& p : params_) {
    std::copy(p.data(), p.data() + p.size(), flat.data() + at);
    at += p.size();
  }
  return flat;
}

void AttentiveModel::unpack_parameters(const VectorXd& flat) {
  Eigen::Index at = 0;
  for (auto& p : params_) {
    require(at + p.size() <= flat.size(), "ShapeMismatch", "parameter vector too short");
    std::copy(flat.data() + at, flat.data() + at + p.size(), p.data());
    at += p.size();
  }
  require(at == flat.size(), "ShapeMismatch", "parameter vector too long");
}

// ---- forward / backward ---------------------------------------------------------------

static void advance_site(const MatrixXd& x, Eigen::RowVectorXd& mean, Eigen::RowVectorXd& var,
                         long long& batches_seen) {
  const double b = static_cast<double>(x.rows());
  const RowVectorXd batch_mean = x.colwise().mean();
  const RowVectorXd batch_var =
      ((x.rowwise() - batch_mean).array().square().colwise().sum() / b).matrix();
  const double n = static_cast<double>(++batches_seen);
  // Cumulative average over batches; frozen once training stops calling this.
  mean += (batch_mean - mean) / n;
  var += (batch_var - var) / n;
}

MatrixXd AttentiveModel::glu_stack_forward_batch(const MatrixXd& in, int slot,
                                                 GluStackCache* cache,
                                                 std::vector<BnSite>* update) const {
  auto layer = [&](const MatrixXd& input, const MatrixXd& wz, const MatrixXd& bz,
                   const MatrixXd& wg, const MatrixXd& bg, int site_z, int site_g,
                   GluLayerCache* lc) {
    const MatrixXd z = (input * wz).rowwise() + RowVectorXd(bz.row(0));
    const MatrixXd g = (input * wg).rowwise() + RowVectorXd(bg.row(0));
    if (update) {
      auto& sz = (*update)[static_cast<std::size_t>(site_z)];
      auto& sg = (*update)[static_cast<std::size_t>(site_g)];
      advance_site(z, sz.mean, sz.var, sz.batches_seen);
      advance_site(g, sg.mean, sg.var, sg.batches_seen);
    }
    RowVectorXd invstd_z, invstd_g;
    const MatrixXd zhat = bn_batch(z, nullptr, &invstd_z);
    const MatrixXd ghat = bn_batch(g, nullptr, &invstd_g);
    const MatrixXd sig = (1.0 + (-ghat.array()).exp()).inverse();
    if (lc) {
      lc->in = input;
      lc->bnz = {zhat, invstd_z};
      lc->bng = {ghat, invstd_g};
      lc->sig = sig;
    }
    return MatrixXd(zhat.array() * sig.array());
  };
  const MatrixXd h1 = layer(in, params_[0], params_[1], params_[2], params_[3],
                            slot_site(slot, 0), slot_site(slot, 1), cache ? &cache->l1 : nullptr);
  return layer(h1, params_[4], params_[5], params_[6], params_[7], slot_site(slot, 2),
               slot_site(slot, 3), cache ? &cache->l2 : nullptr);
}

MatrixXd AttentiveModel::glu_stack_forward_infer(const MatrixXd& in, int slot) const {
  auto layer = [&](const MatrixXd& input, const MatrixXd& wz, const MatrixXd& bz,
                   const MatrixXd& wg, const MatrixXd& bg, int site_z, int site_g) {
    const MatrixXd z = (input * wz).rowwise() + RowVectorXd(bz.row(0));
    const MatrixXd g = (input * wg).rowwise() + RowVectorXd(bg.row(0));
    const auto& sz = bn_sites_[static_cast<std::size_t>(site_z)];
    const auto& sg = bn_sites_[static_cast<std::size_t>(site_g)];
    const MatrixXd zhat =
        (z.rowwise() - sz.mean).array().rowwise() * (sz.var.array() + kBnEps).rsqrt();
    const MatrixXd ghat =
        (g.rowwise() - sg.mean).array().rowwise() * (sg.var.array() + kBnEps).rsqrt();
    const MatrixXd sig = (1.0 + (-ghat.array()).exp()).inverse();
    return MatrixXd(zhat.array() * sig.array());
  };
  const MatrixXd h1 = layer(in, params_[0], params_[1], params_[2], params_[3],
                            slot_site(slot, 0), slot_site(slot, 1));
  return layer(h1, params_[4], params_[5], params_[6], params_[7], slot_site(slot, 2),
               slot_site(slot, 3));
}

MatrixXd AttentiveModel::glu_stack_backward(const MatrixXd& dout, const GluStackCache& cache,
                                            Gradients& grads) const {
  auto layer_backward = [&](const MatrixXd& dy, const GluLayerCache& lc, int wz_i, int bz_i,
                            int wg_i, int bg_i) {
    const MatrixXd dzhat = dy.array() * lc.sig.array();
    const MatrixXd dghat =
        dy.array() * lc.bnz.xhat.array() * lc.sig.array() * (1.0 - lc.sig.array());
    const MatrixXd dz = bn_backward(dzhat, lc.bnz.xhat, lc.bnz.invstd);
    const MatrixXd dg = bn_backward(dghat, lc.bng.xhat, lc.bng.invstd);
    grads.g[static_cast<std::size_t>(wz_i)].noalias() += lc.in.transpose() * dz;
    grads.g[static_cast<std::size_t>(bz_i)].row(0) += dz.colwise().sum();
    grads.g[static_cast<std::size_t>(wg_i)].noalias() += lc.in.transpose() * dg;
    grads.g[static_cast<std::size_t>(bg_i)].row(0) += dg.colwise().sum();
    return MatrixXd(dz * params_[static_cast<std::size_t>(wz_i)].transpose() +
                    dg * params_[static_cast<std::size_t>(wg_i)].transpose());
  };
  const MatrixXd dh1 = layer_backward(dout, cache.l2, 4, 5, 6, 7);
  return layer_backward(dh1, cache.l1, 0, 1, 2, 3);
}

double AttentiveModel::forward_batch(const MatrixXd& x_std, const MatrixXd& y_std,
                                     ForwardCache* cache, std::vector<BnSite>* update) const {
  const Eigen::Index b = x_std.rows();
  const int s_count = config_.n_steps;
  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  fc.steps.resize(static_cast<std::size_t>(s_count));

  fc.a0 = glu_stack_forward_batch(x_std, 0, &fc.glu0, update);
  MatrixXd prior = MatrixXd::Ones(b, d_in_);
  MatrixXd aprev = fc.a0;
  fc.sagg = MatrixXd::Zero(b, config_.hidden_dim);

  for (int s = 0; s < s_count; ++s) {
    StepCache& sc = fc.steps[static_cast<std::size_t>(s)];
    sc.aprev = aprev;
    sc.prior = prior;
    const MatrixXd raw = (aprev * att_w(s)).rowwise() + RowVectorXd(att_b(s).row(0));
    if (update) {
      auto& site = (*update)[static_cast<std::size_t>(att_site(s))];
      advance_site(raw, site.mean, site.var, site.batches_seen);
    }
    RowVectorXd invstd;
    sc.bn_att.xhat = bn_batch(raw, nullptr, &invstd);
    sc.bn_att.invstd = invstd;
    sc.logits = sc.bn_att.xhat;
    const MatrixXd pre = prior.array() * sc.logits.array();
    sc.mask = sparsemax_rows(pre);
    prior = update_prior(prior, sc.mask, config_.gamma);
    sc.xm = sc.mask.array() * x_std.array();
    sc.o = glu_stack_forward_batch(sc.xm, s + 1, &sc.glu, update);
    fc.sagg += sc.o.cwiseMax(0.0);
    aprev = sc.o;
  }

  fc.yhat = (fc.sagg * params_[static_cast<std::size_t>(head_w_index())]).rowwise() +
            RowVectorXd(params_[static_cast<std::size_t>(head_w_index() + 1)].row(0));
  const double denom = static_cast<double>(b) * static_cast<double>(t_out_);
  return (fc.yhat - y_std).squaredNorm() / denom;
}

void AttentiveModel::backward(const MatrixXd& x_std, const MatrixXd& y_std,
                              const ForwardCache& fc, Gradients& grads) const {
  const Eigen::Index b = x_std.rows();
  const int s_count = config_.n_steps;
  const double denom = static_cast<double>(b) * static_cast<double>(t_out_);

  const MatrixXd dyhat = 2.0 * (fc.yhat - y_std) / denom;
  grads.g[static_cast<std::size_t>(head_w_index())].noalias() += fc.sagg.transpose() * dyhat;
  grads.g[static_cast<std::size_t>(head_w_index() + 1)].row(0) += dyhat.colwise().sum();
  const MatrixXd dsagg = dyhat * params_[static_cast<std::size_t>(head_w_index())].transpose();

  MatrixXd d_aprev = MatrixXd::Zero(b, config_.hidden_dim);
  MatrixXd d_prior_next = MatrixXd::Zero(b, d_in_);

  for (int s = s_count - 1; s >= 0; --s) {
    const StepCache& sc = fc.steps[static_cast<std::size_t>(s)];
    // o feeds the ReLU aggregate and the next step's attention input.
    MatrixXd do_step = (sc.o.array() > 0.0).select(dsagg, MatrixXd::Zero(b, config_.hidden_dim));
    do_step += d_aprev;
    const MatrixXd dxm = glu_stack_backward(do_step, sc.glu, grads);
    MatrixXd dmask = dxm.array() * x_std.array();
    // prior recursion: P[s+1] = P[s] (gamma - M[s])
    dmask -= d_prior_next.cwiseProduct(sc.prior);
    MatrixXd d_prior = d_prior_next.array() * (config_.gamma - sc.mask.array());
    const MatrixXd dpre = sparsemax_backward_rows(sc.mask, dmask);
    const MatrixXd dlogits = dpre.array() * sc.prior.array();
    d_prior.array() += dpre.array() * sc.logits.array();
    const MatrixXd draw = bn_backward(dlogits, sc.bn_att.xhat, sc.bn_att.invstd);
    grads.g[static_cast<std::size_t>(8 + 2 * s)].noalias() += sc.aprev.transpose() * draw;
    grads.g[static_cast<std::size_t>(9 + 2 * s)].row(0) += draw.colwise().sum();
    d_aprev = draw * att_w(s).transpose();
    d_prior_next = d_prior;
  }
  // d_prior_next now targets the all-ones initial prior: constant, discard.
  glu_stack_backward(d_aprev, fc.glu0, grads);
}

MatrixXd AttentiveModel::forward_infer(const MatrixXd& x_std, ForwardTrace* trace) const {
  const Eigen::Index b = x_std.rows();
  const int s_count = config_.n_steps;
  if (trace) {
    trace->masks.clear();
    trace->etas.resize(b, s_count);
  }
  MatrixXd aprev = glu_stack_forward_infer(x_std, 0);
  MatrixXd prior = MatrixXd::Ones(b, d_in_);
  MatrixXd sagg = MatrixXd::Zero(b, config_.hidden_dim);
  for (int s = 0; s < s_count; ++s) {
    const MatrixXd mask = attentive_step(aprev, prior, s);
    prior = update_prior(prior, mask, config_.gamma);
    const MatrixXd xm = mask.array() * x_std.array();
    const MatrixXd o = glu_stack_forward_infer(xm, s + 1);
    const MatrixXd r = o.cwiseMax(0.0);
    sagg += r;
    if (trace) {
      trace->masks.push_back(mask);
      trace->etas.col(s) = r.rowwise().sum();
    }
    aprev = o;
  }
  return (sagg * params_[static_cast<std::size_t>(head_w_index())]).rowwise() +
         RowVectorXd(params_[static_cast<std::size_t>(head_w_index() + 1)].row(0));
}

Eigen::MatrixXd AttentiveModel::attentive_step(const MatrixXd& a_prev, const MatrixXd& prior,
                                               int step) const {
  require(step >= 0 && step < config_.n_steps, "ShapeMismatch", "attention step out of range");
  require(a_prev.cols() == config_.hidden_dim, "ShapeMismatch",
          "a_prev width must equal hidden_dim");
  require(prior.rows() == a_prev.rows() && prior.cols() == d_in_, "ShapeMismatch",
          "prior must be batch x n_features");
  const MatrixXd raw = (a_prev * att_w(step)).rowwise() + RowVectorXd(att_b(step).row(0));
  const auto& site = bn_sites_[static_cast<std::size_t>(att_site(step))];
  const MatrixXd logits =
      (raw.rowwise() - site.mean).array().rowwise() * (site.var.array() + kBnEps).rsqrt();
  return sparsemax_rows(prior.array() * logits.array());
}

// ---- training -----------------------------------------------------------------------

AttentiveModel AttentiveModel::make_untrained(const AttentiveConfig& config, int d_in, int t_out) {
  config.validate();
  AttentiveModel model;
  model.config_ = config;
  model.d_in_ = d_in;
  model.t_out_ = t_out;
  model.x_stats_ = Standardizer::from_columns(
      std::vector<ColumnStats>(static_cast<std::size_t>(d_in), ColumnStats{0.0, 1.0, false}));
  model.y_mean_ = RowVectorXd::Zero(t_out);
  model.y_scale_ = RowVectorXd::Ones(t_out);
  model.init_parameters(config.seed);
  return model;
}

double AttentiveModel::loss(const MatrixXd& x_std, const MatrixXd& y_std) const {
  return forward_batch(x_std, y_std, nullptr, nullptr);
}

double AttentiveModel::loss_and_gradient(const MatrixXd& x_std, const MatrixXd& y_std,
                                         VectorXd* grad) const {
  ForwardCache cache;
  const double value = forward_batch(x_std, y_std, &cache, nullptr);
  Gradients grads(params_);
  backward(x_std, y_std, cache, grads);
  if (grad) {
    Eigen::Index total = 0;
    for (const auto& g : grads.g) total += g.size();
    grad->resize(total);
    Eigen::Index at = 0;
    for (const auto& g : grads.g) {
      std::copy(g.data(), g.data() + g.size(), grad->data() + at);
      at += g.size();
    }
  }
  return value;
}

AttentiveModel AttentiveModel::train(const AttentiveConfig& config, const MatrixXd& x,
                                     const MatrixXd& y) {
  config.validate();
  require(x.rows() == y.rows(), "ShapeMismatch", "X and Y row counts differ");
  require(x.rows() >= config.batch_size, "TooFewSamples",
          "need at least batch_size training rows");
  require(y.allFinite() && x.allFinite(), "NonFiniteInput", "training data must be finite");

  AttentiveModel model;
  model.config_ = config;
  model.d_in_ = static_cast<int>(x.cols());
  model.t_out_ = static_cast<int>(y.cols());
  model.x_stats_ = Standardizer::fit(x);
  model.y_mean_ = y.colwise().mean();
  model.y_scale_.resize(model.t_out_);
  for (Eigen::Index t = 0; t < y.cols(); ++t) {
    const double sd = std::sqrt((y.col(t).array() - model.y_mean_(t)).square().sum() /
                                std::max<double>(1.0, static_cast<double>(y.rows() - 1)));
    model.y_scale_(t) = sd > 0.0 ? sd : 1.0;
  }
  model.init_parameters(config.seed);

  const MatrixXd x_std = model.x_stats_.transform(x);
  const MatrixXd y_std =
      ((y.rowwise() - model.y_mean_).array().rowwise() / model.y_scale_.array()).matrix();

  const Eigen::Index n = x.rows();
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(config.seed, 0x5e55));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    std::size_t at = 0;
    while (at < order.size()) {
      std::size_t take = std::min<std::size_t>(config.batch_size, order.size() - at);
      if (order.size() - at - take == 1) take += 1;  // avoid a degenerate 1-row batch
      MatrixXd xb(static_cast<Eigen::Index>(take), model.d_in_);
      MatrixXd yb(static_cast<Eigen::Index>(take), model.t_out_);
      for (std::size_t i = 0; i < take; ++i) {
        xb.row(static_cast<Eigen::Index>(i)) = x_std.row(static_cast<Eigen::Index>(order[at + i]));
        yb.row(static_cast<Eigen::Index>(i)) = y_std.row(static_cast<Eigen::Index>(order[at + i]));
      }
      at += take;

      ForwardCache cache;
      const double batch_loss = model.forward_batch(xb, yb, &cache, &model.bn_sites_);
      if (!std::isfinite(batch_loss)) {
        contract_fail("DivergenceDetected", "training loss became non-finite");
      }
      Gradients grads(model.params_);
      model.backward(xb, yb, cache, grads);
      for (std::size_t p = 0; p < model.params_.size(); ++p) {
        model.params_[p] -= config.learning_rate * grads.g[p];
      }
    }
    const double epoch_loss = model.forward_batch(x_std, y_std, nullptr, nullptr);
    if (!std::isfinite(epoch_loss)) {
      contract_fail("DivergenceDetected", "training loss became non-finite");
    }
    model.loss_history_.push_back(epoch_loss);
  }
  return model;
}

MatrixXd AttentiveModel::predict(const MatrixXd& x) const {
  return predict_traced(x, nullptr);
}

MatrixXd AttentiveModel::predict_traced(const MatrixXd& x, ForwardTrace* trace) const {
  require(x.cols() == d_in_, "ShapeMismatch", "prediction input width differs from training");
  const MatrixXd yhat_std = forward_infer(x_stats_.transform(x), trace);
  return (yhat_std.array().rowwise() * y_scale_.array()).matrix().rowwise() + y_mean_;
}

// ---- serialization ---------------------------------------------------------------------

namespace {

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& doc) {
  const Eigen::Index rows = static_cast<Eigen::Index>(doc.size());
  const Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(doc[0].size());
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = doc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    }
  }
  return m;
}

}  // namespace

json AttentiveModel::to_json() const {
  json doc;
  doc["format_version"] = 1;
  doc["kind"] = "attentive";
  doc["config"] = {{"n_steps", config_.n_steps},     {"gamma", config_.gamma},
                   {"hidden_dim", config_.hidden_dim}, {"learning_rate", config_.learning_rate},
                   {"batch_size", config_.batch_size}, {"epochs", config_.epochs},
                   {"seed", config_.seed}};
  doc["d_in"] = d_in_;
  doc["t_out"] = t_out_;
  json stats = json::array();
  for (const auto& c : x_stats_.columns()) {
    stats.push_back({{"mean", c.mean}, {"sd", c.sd}, {"constant", c.constant}});
  }
  doc["x_stats"] = std::move(stats);
  doc["y_mean"] = std::vector<double>(y_mean_.data(), y_mean_.data() + y_mean_.size());
  doc["y_scale"] = std::vector<double>(y_scale_.data(), y_scale_.data() + y_scale_.size());
  doc["params"] = json::array();
  for (const auto& p : params_) doc["params"].push_back(matrix_to_json(p));
  doc["bn_sites"] = json::array();
  for (const auto& site : bn_sites_) {
    doc["bn_sites"].push_back(
        {{"mean", std::vector<double>(site.mean.data(), site.mean.data() + site.mean.size())},
         {"var", std::vector<double>(site.var.data(), site.var.data() + site.var.size())},
         {"batches_seen", site.batches_seen}});
  }
  return doc;
}

AttentiveModel AttentiveModel::from_json(const json& doc) {
  require(doc.at("format_version").get<int>() == 1, "UnsupportedVersion",
          "attentive document version mismatch");
  AttentiveConfig config;
  const auto& c = doc.at("config");
  config.n_steps = c.at("n_steps").get<int>();
  config.gamma = c.at("gamma").get<double>();
  config.hidden_dim = c.at("hidden_dim").get<int>();
  config.learning_rate = c.at("learning_rate").get<double>();
  config.batch_size = c.at("batch_size").get<int>();
  config.epochs = c.at("epochs").get<int>();
  config.seed = c.at("seed").get<std::uint64_t>();

  AttentiveModel model = make_untrained(config, doc.at("d_in").get<int>(), doc.at("t_out").get<int>());
  std::vector<ColumnStats> cols;
  for (const auto& s : doc.at("x_stats")) {
    cols.push_back({s.at("mean").get<double>(), s.at("sd").get<double>(),
                    s.at("constant").get<bool>()});
  }
  model.x_stats_ = Standardizer::from_columns(std::move(cols));
  const auto ym = doc.at("y_mean").get<std::vector<double>>();
  const auto ys = doc.at("y_scale").get<std::vector<double>>();
  model.y_mean_ = Eigen::Map<const RowVectorXd>(ym.data(), static_cast<Eigen::Index>(ym.size()));
  model.y_scale_ = Eigen::Map<const RowVectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  const auto& params = doc.at("params");
  require(params.size() == model.params_.size(), "UnsupportedVersion",
          "parameter block count mismatch");
  for (std::size_t p = 0; p < model.params_.size(); ++p) {
    model.params_[p] = matrix_from_json(params[p]);
  }
  const auto& sites = doc.at("bn_sites");
  require(sites.size() == model.bn_sites_.size(), "UnsupportedVersion", "BN site count mismatch");
  for (std::size_t s = 0; s < model.bn_sites_.size(); ++s) {
    const auto mean = sites[s].at("mean").get<std::vector<double>>();
    const auto var = sites[s].at("var").get<std::vector<double>>();
    model.bn_sites_[s].mean =
        Eigen::Map<const RowVectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    model.bn_sites_[s].var =
        Eigen::Map<const RowVectorXd>(var.data(), static_cast<Eigen::Index>(var.size()));
    model.bn_sites_[s].batches_seen = sites[s].at("batches_seen").get<long long>();
  }
  return model;
}

}  // namespace m2m
