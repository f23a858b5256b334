#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "guiagent/reflection.hpp"

namespace guiagent {

// exp(rc) / (exp(rr) + exp(rc)), stable for large rewards.
double pref_likelihood(double r_chosen, double r_rejected) noexcept;
double sigmoid(double x) noexcept;
// log(sigmoid(x)) without overflow.
double log_sigmoid(double x) noexcept;

// One preference over a state key: catalog actions in canonical text form.
struct PrefExample {
  std::string state_key;
  std::string chosen;
  std::string rejected;
};

// Key of a DPO context document: hash of its compact dump.
std::string state_key(const nlohmann::json& context);
std::vector<PrefExample> examples_from_records(const std::vector<DpoRecord>& records);

// Softmax policy over a finite action catalog: one row of logits per state.
class ToyPolicy {
 public:
  ToyPolicy() = default;
  ToyPolicy(std::vector<std::string> states, std::vector<std::string> actions);
  ToyPolicy(std::vector<std::string> states, std::vector<std::string> actions, Eigen::MatrixXd logits);

  // Uniform policy over the states and actions appearing in `examples`.
  static ToyPolicy uniform_for(const std::vector<PrefExample>& examples);

  const std::vector<std::string>& states() const noexcept { return states_; }
  const std::vector<std::string>& actions() const noexcept { return actions_; }
  const Eigen::MatrixXd& logits() const noexcept { return logits_; }
  Eigen::MatrixXd& logits() noexcept { return logits_; }

  // Throws NotFound / ActionNotInCatalog.
  Eigen::Index state_index(const std::string& key) const;
  Eigen::Index action_index(const std::string& action) const;

  Eigen::VectorXd probs(Eigen::Index state) const;
  double log_prob(Eigen::Index state, Eigen::Index action) const;
  double log_prob(const std::string& key, const std::string& action) const;

  nlohmann::json to_json() const;
  static ToyPolicy from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> states_;
  std::vector<std::string> actions_;
  std::map<std::string, Eigen::Index> state_ix_;
  std::map<std::string, Eigen::Index> action_ix_;
  Eigen::MatrixXd logits_;
};

struct DpoConfig {
  double beta = 0.1;
  double learning_rate = 1.0;
  int steps = 200;
  std::size_t workers = 1;
};

// Mean of -log sigmoid(beta * [(lp_c - ref_c) - (lp_r - ref_r)]).
// Throws EmptyDataset, ActionNotInCatalog.
double dpo_loss(const std::vector<PrefExample>& pairs, const ToyPolicy& policy, const ToyPolicy& ref, double beta,
                std::size_t workers = 1);
// d loss / d logits, same shape as policy.logits().
Eigen::MatrixXd dpo_gradient(const std::vector<PrefExample>& pairs, const ToyPolicy& policy, const ToyPolicy& ref,
                             double beta, std::size_t workers = 1);

// Max relative error between the analytic gradient and central differences
// over all logits. Entries where both are below 1e-8 in magnitude count as 0.
double dpo_grad_check(const ToyPolicy& policy, const ToyPolicy& ref, const std::vector<PrefExample>& pairs,
                      double beta, double epsilon);

// Gradient descent from a copy of `sft`; a step that would raise the loss is
// retried at half the learning rate. `loss_history` receives the loss of
// every accepted iterate, starting with the initial one.
ToyPolicy train_toy_policy(const std::vector<PrefExample>& pairs, const ToyPolicy& sft, const DpoConfig& cfg,
                           std::vector<double>* loss_history = nullptr);

}  // namespace guiagent
