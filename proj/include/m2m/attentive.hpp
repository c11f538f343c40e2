#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "m2m/preprocess.hpp"

namespace m2m {

// ---- standalone pieces -------------------------------------------------------

// Euclidean projection onto the probability simplex; supports exact zeros.
Eigen::VectorXd sparsemax(const Eigen::VectorXd& z);
Eigen::MatrixXd sparsemax_rows(const Eigen::MatrixXd& z);

// Jacobian-vector product: on the support S the Jacobian is I - 11^T/|S|,
// zero elsewhere. Boundary ties count as in-support.
Eigen::VectorXd sparsemax_backward(const Eigen::VectorXd& output, const Eigen::VectorXd& grad);
Eigen::MatrixXd sparsemax_backward_rows(const Eigen::MatrixXd& output, const Eigen::MatrixXd& grad);

// P[i] = P[i-1] (gamma - M[i]) elementwise; the initial prior is all ones.
Eigen::MatrixXd update_prior(const Eigen::MatrixXd& prior, const Eigen::MatrixXd& mask,
                             double gamma);

enum class MaskAggregate { paper, normalized };

// Pools per-step masks into per-sample feature importance, weighted by the
// step scales. The "paper" variant squares the masks in the denominator as
// printed; "normalized" drops the square so each row sums to one.
Eigen::MatrixXd aggregate_masks(const std::vector<Eigen::MatrixXd>& masks,
                                const Eigen::MatrixXd& etas, MaskAggregate variant);

// ---- the model ---------------------------------------------------------------

struct AttentiveConfig {
  int n_steps = 2;
  double gamma = 1.5;
  int hidden_dim = 8;
  double learning_rate = 0.02;
  int batch_size = 32;
  int epochs = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ForwardTrace {
  std::vector<Eigen::MatrixXd> masks;  // one B x D matrix per step
  Eigen::MatrixXd etas;                // B x n_steps
};

// Sparse attentive multi-output regressor: per-step attentive transformers
// (affine + batch standardization + sparsemax) gate the input features, a
// shared two-layer gated transformer processes them, and ReLU-positive
// activations accumulate into a linear head. Trained by plain minibatch
// gradient descent with hand-written reverse-mode gradients.
class AttentiveModel {
public:
  static AttentiveModel train(const AttentiveConfig& config, const Eigen::MatrixXd& x,
                              const Eigen::MatrixXd& y);

  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd predict_traced(const Eigen::MatrixXd& x, ForwardTrace* trace) const;

  // One attentive-transformer evaluation with frozen statistics; exposed for
  // the mask-level contract.
  Eigen::MatrixXd attentive_step(const Eigen::MatrixXd& a_prev, const Eigen::MatrixXd& prior,
                                 int step) const;

  const AttentiveConfig& config() const { return config_; }
  const std::vector<double>& loss_history() const { return loss_history_; }
  int input_dim() const { return d_in_; }
  int output_dim() const { return t_out_; }

  nlohmann::json to_json() const;
  static AttentiveModel from_json(const nlohmann::json& doc);

  // ---- gradient-check hooks (test support) ----
  // Random-initialized model with identity input/output scaling.
  static AttentiveModel make_untrained(const AttentiveConfig& config, int d_in, int t_out);
  Eigen::VectorXd pack_parameters() const;
  void unpack_parameters(const Eigen::VectorXd& flat);
  // Training-mode (batch statistics) loss; never touches running statistics.
  double loss(const Eigen::MatrixXd& x_std, const Eigen::MatrixXd& y_std) const;
  double loss_and_gradient(const Eigen::MatrixXd& x_std, const Eigen::MatrixXd& y_std,
                           Eigen::VectorXd* grad) const;

private:
  struct BnSite {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd var;
    long long batches_seen = 0;
  };
  struct BnCache;
  struct GluLayerCache;
  struct GluStackCache;
  struct StepCache;
  struct ForwardCache;
  struct Gradients;

  AttentiveConfig config_;
  int d_in_ = 0;
  int t_out_ = 0;
  Standardizer x_stats_;
  Eigen::RowVectorXd y_mean_;
  Eigen::RowVectorXd y_scale_;
  std::vector<Eigen::MatrixXd> params_;
  std::vector<BnSite> bn_sites_;
  std::vector<double> loss_history_;

  // parameter layout helpers
  int head_w_index() const { return 8 + 2 * config_.n_steps; }
  const Eigen::MatrixXd& att_w(int s) const { return params_[static_cast<std::size_t>(8 + 2 * s)]; }
  const Eigen::MatrixXd& att_b(int s) const { return params_[static_cast<std::size_t>(9 + 2 * s)]; }
  int slot_site(int slot, int which) const { return 4 * slot + which; }
  int att_site(int s) const { return 4 * (config_.n_steps + 1) + s; }

  void init_parameters(std::uint64_t seed);
  // Batch-statistics forward; when update is non-null the running statistics
  // of every visited site are advanced (training), otherwise left untouched
  // (gradient checks).
  Eigen::MatrixXd glu_stack_forward_batch(const Eigen::MatrixXd& in, int slot,
                                          GluStackCache* cache,
                                          std::vector<BnSite>* update) const;
  Eigen::MatrixXd glu_stack_forward_infer(const Eigen::MatrixXd& in, int slot) const;
  Eigen::MatrixXd glu_stack_backward(const Eigen::MatrixXd& dout, const GluStackCache& cache,
                                     Gradients& grads) const;
  double forward_batch(const Eigen::MatrixXd& x_std, const Eigen::MatrixXd& y_std,
                       ForwardCache* cache, std::vector<BnSite>* update) const;
  void backward(const Eigen::MatrixXd& x_std, const Eigen::MatrixXd& y_std,
                const ForwardCache& cache, Gradients& grads) const;
  Eigen::MatrixXd forward_infer(const Eigen::MatrixXd& x_std, ForwardTrace* trace) const;
};

}  // namespace m2m
