#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "pbac/envs.hpp"

namespace pbac {

struct Transition {
  Observation s;
  ActionVec a;
  double r = 0.0;
  Observation s_next;
  bool done = false;
};

// Batch arrays in sampled-index order.
struct Minibatch {
  Eigen::MatrixXd s;       // n x d_s
  Eigen::MatrixXd a;       // n x d_a
  Eigen::VectorXd r;       // n
  Eigen::MatrixXd s_next;  // n x d_s
  Eigen::VectorXd done;    // n, 0/1
  std::vector<int> indices;
  int size() const { return static_cast<int>(r.size()); }
};

// n x K binary matrix b_ik ~ Bernoulli(1 - kappa).
using BootstrapMask = Eigen::MatrixXd;

BootstrapMask draw_mask(int n, int K, double kappa, std::mt19937_64& rng);

// Fixed-capacity ring buffer; oldest entry overwritten when full.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity) : capacity_(capacity) { storage_.reserve(capacity); }

  void push(Transition t);
  // Uniform with replacement; throws on an empty buffer.
  Minibatch sample(int n, std::mt19937_64& rng) const;

  int size() const { return static_cast<int>(storage_.size()); }
  int capacity() const { return capacity_; }
  int write_index() const { return write_index_; }
  const Transition& at(int i) const { return storage_[i]; }

 private:
  int capacity_;
  int write_index_ = 0;
  std::vector<Transition> storage_;
};

}  // namespace pbac
