#include "guiagent/preference.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "guiagent/trace_io.hpp"
#include "guiagent/util.hpp"

namespace guiagent {

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) noexcept {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double pref_likelihood(double r_chosen, double r_rejected) noexcept {
  double m = std::max(r_chosen, r_rejected);
  double c = std::exp(r_chosen - m);
  double r = std::exp(r_rejected - m);
  return c / (r + c);
}

std::string state_key(const nlohmann::json& context) {
  return to_hex(fnv1a64(context.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace)));
}

std::vector<PrefExample> examples_from_records(const std::vector<DpoRecord>& records) {
  std::vector<PrefExample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back({state_key(r.context), serialize_action(r.chosen.action), serialize_action(r.rejected.action)});
  }
  return out;
}

ToyPolicy::ToyPolicy(std::vector<std::string> states, std::vector<std::string> actions)
    : ToyPolicy(states, actions,
                Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(states.size()),
                                      static_cast<Eigen::Index>(actions.size()))) {}

ToyPolicy::ToyPolicy(std::vector<std::string> states, std::vector<std::string> actions, Eigen::MatrixXd logits)
    : states_(std::move(states)), actions_(std::move(actions)), logits_(std::move(logits)) {
  if (logits_.rows() != static_cast<Eigen::Index>(states_.size()) ||
      logits_.cols() != static_cast<Eigen::Index>(actions_.size())) {
    throw Error(ErrorCode::Precondition, "logit table shape does not match states x actions");
  }
  if (actions_.empty()) throw Error(ErrorCode::Precondition, "empty action catalog");
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (!state_ix_.emplace(states_[i], static_cast<Eigen::Index>(i)).second) {
      throw Error(ErrorCode::Precondition, "duplicate state key " + states_[i]);
    }
  }
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    if (!action_ix_.emplace(actions_[i], static_cast<Eigen::Index>(i)).second) {
      throw Error(ErrorCode::Precondition, "duplicate catalog action " + actions_[i]);
    }
  }
  if (!logits_.allFinite()) throw Error(ErrorCode::Range, "non-finite logits");
}

ToyPolicy ToyPolicy::uniform_for(const std::vector<PrefExample>& examples) {
  std::set<std::string> states;
  std::set<std::string> actions;
  for (const auto& e : examples) {
    states.insert(e.state_key);
    actions.insert(e.chosen);
    actions.insert(e.rejected);
  }
  return ToyPolicy({states.begin(), states.end()}, {actions.begin(), actions.end()});
}

Eigen::Index ToyPolicy::state_index(const std::string& key) const {
  auto it = state_ix_.find(key);
  if (it == state_ix_.end()) throw Error(ErrorCode::NotFound, "unknown state key " + key);
  return it->second;
}

Eigen::Index ToyPolicy::action_index(const std::string& action) const {
  auto it = action_ix_.find(action);
  if (it == action_ix_.end()) throw Error(ErrorCode::ActionNotInCatalog, "action not in catalog: " + action);
  return it->second;
}

Eigen::VectorXd ToyPolicy::probs(Eigen::Index state) const {
  Eigen::VectorXd row = logits_.row(state).transpose();
  row.array() -= row.maxCoeff();
  row = row.array().exp().matrix();
  return row / row.sum();
}

double ToyPolicy::log_prob(Eigen::Index state, Eigen::Index action) const {
  auto row = logits_.row(state);
  double m = row.maxCoeff();
  double lse = m + std::log((row.array() - m).exp().sum());
  return row(action) - lse;
}

double ToyPolicy::log_prob(const std::string& key, const std::string& action) const {
  return log_prob(state_index(key), action_index(action));
}

nlohmann::json ToyPolicy::to_json() const {
  nlohmann::json states = nlohmann::json::object();
  for (std::size_t i = 0; i < states_.size(); ++i) {
    std::vector<double> row(actions_.size());
    for (std::size_t a = 0; a < actions_.size(); ++a) {
      row[a] = logits_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
    }
    states[states_[i]] = row;
  }
  return {{"format", "toy-policy"}, {"version", 1}, {"actions", actions_}, {"states", std::move(states)}};
}

ToyPolicy ToyPolicy::from_json(const nlohmann::json& j) {
  io::require_exact_keys(j, {"format", "version", "actions", "states"}, "toy policy");
  if (j["format"] != "toy-policy") throw Error(ErrorCode::CorruptRecord, "not a toy policy file");
  if (j["version"] != 1) throw Error(ErrorCode::SchemaVersionMismatch, "unsupported toy policy version");
  try {
    auto actions = j["actions"].get<std::vector<std::string>>();
    std::vector<std::string> states;
    for (const auto& [k, v] : j["states"].items()) states.push_back(k);
    Eigen::MatrixXd logits(static_cast<Eigen::Index>(states.size()), static_cast<Eigen::Index>(actions.size()));
    for (std::size_t i = 0; i < states.size(); ++i) {
      auto row = j["states"][states[i]].get<std::vector<double>>();
      if (row.size() != actions.size()) throw Error(ErrorCode::CorruptRecord, "logit row length mismatch");
      for (std::size_t a = 0; a < row.size(); ++a) {
        logits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = row[a];
      }
    }
    return ToyPolicy(std::move(states), std::move(actions), std::move(logits));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, std::string("toy policy: ") + e.what());
  }
}

namespace {

struct Indexed {
  Eigen::Index s_pol, s_ref, c_pol, r_pol, c_ref, r_ref;
};

std::vector<Indexed> index_pairs(const std::vector<PrefExample>& pairs, const ToyPolicy& policy,
                                 const ToyPolicy& ref) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyDataset, "no preference pairs");
  std::vector<Indexed> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({policy.state_index(p.state_key), ref.state_index(p.state_key), policy.action_index(p.chosen),
                   policy.action_index(p.rejected), ref.action_index(p.chosen), ref.action_index(p.rejected)});
  }
  return out;
}

double margin(const Indexed& x, const ToyPolicy& policy, const ToyPolicy& ref, double beta) {
  double chosen = policy.log_prob(x.s_pol, x.c_pol) - ref.log_prob(x.s_ref, x.c_ref);
  double rejected = policy.log_prob(x.s_pol, x.r_pol) - ref.log_prob(x.s_ref, x.r_ref);
  return beta * (chosen - rejected);
}

}  // namespace

double dpo_loss(const std::vector<PrefExample>& pairs, const ToyPolicy& policy, const ToyPolicy& ref, double beta,
                std::size_t workers) {
  if (!(beta > 0)) throw Error(ErrorCode::Range, "beta must be positive");
  auto ix = index_pairs(pairs, policy, ref);
  std::vector<double> terms(ix.size());
  parallel_for(ix.size(), workers, [&](std::size_t i) { terms[i] = -log_sigmoid(margin(ix[i], policy, ref, beta)); });
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum / static_cast<double>(terms.size());
}

Eigen::MatrixXd dpo_gradient(const std::vector<PrefExample>& pairs, const ToyPolicy& policy, const ToyPolicy& ref,
                             double beta, std::size_t workers) {
  if (!(beta > 0)) throw Error(ErrorCode::Range, "beta must be positive");
  auto ix = index_pairs(pairs, policy, ref);
  // d(-log sigmoid(z))/dz = -sigmoid(-z); dz/dlogits is beta * (e_c - e_r)
  // on the pair's state row since the softmax normalizers cancel.
  std::vector<double> weights(ix.size());
  parallel_for(ix.size(), workers,
               [&](std::size_t i) { weights[i] = -sigmoid(-margin(ix[i], policy, ref, beta)) * beta; });
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(policy.logits().rows(), policy.logits().cols());
  const double inv_m = 1.0 / static_cast<double>(ix.size());
  for (std::size_t i = 0; i < ix.size(); ++i) {
    grad(ix[i].s_pol, ix[i].c_pol) += weights[i] * inv_m;
    grad(ix[i].s_pol, ix[i].r_pol) -= weights[i] * inv_m;
  }
  return grad;
}

double dpo_grad_check(const ToyPolicy& policy, const ToyPolicy& ref, const std::vector<PrefExample>& pairs,
                      double beta, double epsilon) {
  if (!(epsilon > 0 && epsilon <= 1e-3)) throw Error(ErrorCode::Range, "epsilon must be in (0, 1e-3]");
  Eigen::MatrixXd analytic = dpo_gradient(pairs, policy, ref, beta);
  ToyPolicy probe = policy;
  double worst = 0.0;
  for (Eigen::Index r = 0; r < analytic.rows(); ++r) {
    for (Eigen::Index c = 0; c < analytic.cols(); ++c) {
      double saved = probe.logits()(r, c);
      probe.logits()(r, c) = saved + epsilon;
      double up = dpo_loss(pairs, probe, ref, beta);
      probe.logits()(r, c) = saved - epsilon;
      double down = dpo_loss(pairs, probe, ref, beta);
      probe.logits()(r, c) = saved;
      double numeric = (up - down) / (2.0 * epsilon);
      double a = analytic(r, c);
      double scale = std::max(std::abs(a), std::abs(numeric));
      if (scale < 1e-8) continue;
      worst = std::max(worst, std::abs(a - numeric) / scale);
    }
  }
  return worst;
}

ToyPolicy train_toy_policy(const std::vector<PrefExample>& pairs, const ToyPolicy& sft, const DpoConfig& cfg,
                           std::vector<double>* loss_history) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyDataset, "no preference pairs");
  if (cfg.learning_rate < 0) throw Error(ErrorCode::Range, "learning rate must be >= 0");
  ToyPolicy policy = sft;
  double loss = dpo_loss(pairs, policy, sft, cfg.beta, cfg.workers);
  if (loss_history) loss_history->assign(1, loss);
  if (cfg.learning_rate == 0.0) return policy;
  double lr = cfg.learning_rate;
  for (int step = 0; step < cfg.steps; ++step) {
    Eigen::MatrixXd grad = dpo_gradient(pairs, policy, sft, cfg.beta, cfg.workers);
    if (grad.cwiseAbs().maxCoeff() == 0.0) break;
    bool accepted = false;
    for (int halvings = 0; halvings < 60 && !accepted; ++halvings) {
      ToyPolicy next = policy;
      next.logits() -= lr * grad;
      double next_loss = dpo_loss(pairs, next, sft, cfg.beta, cfg.workers);
      if (next_loss <= loss) {
        policy = std::move(next);
        loss = next_loss;
        accepted = true;
      } else {
        lr *= 0.5;
      }
    }
    if (!accepted) break;
    if (loss_history) loss_history->push_back(loss);
  }
  return policy;
}

}  // namespace guiagent
