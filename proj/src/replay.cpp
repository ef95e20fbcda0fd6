#include "pbac/replay.hpp"

#include <stdexcept>

namespace pbac {

void ReplayBuffer::push(Transition t) {
  if (size() < capacity_) {
    storage_.push_back(std::move(t));
  } else {
    storage_[write_index_] = std::move(t);
  }
  write_index_ = (write_index_ + 1) % capacity_;
}

Minibatch ReplayBuffer::sample(int n, std::mt19937_64& rng) const {
  if (storage_.empty()) throw std::runtime_error("sample: empty replay buffer");
  const int d_s = static_cast<int>(storage_.front().s.size());
  const int d_a = static_cast<int>(storage_.front().a.size());
  Minibatch b;
  b.s.resize(n, d_s);
  b.a.resize(n, d_a);
  b.r.resize(n);
  b.s_next.resize(n, d_s);
  b.done.resize(n);
  b.indices.resize(n);
  std::uniform_int_distribution<int> idx(0, size() - 1);
  for (int i = 0; i < n; ++i) {
    const int j = idx(rng);
    const Transition& t = storage_[j];
    b.indices[i] = j;
    b.s.row(i) = t.s.transpose();
    b.a.row(i) = t.a.transpose();
    b.r(i) = t.r;
    b.s_next.row(i) = t.s_next.transpose();
    b.done(i) = t.done ? 1.0 : 0.0;
  }
  return b;
}

BootstrapMask draw_mask(int n, int K, double kappa, std::mt19937_64& rng) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("draw_mask: kappa not in (0,1)");
  std::bernoulli_distribution keep(1.0 - kappa);
  BootstrapMask m(n, K);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < K; ++k) m(i, k) = keep(rng) ? 1.0 : 0.0;
  return m;
}

}  // namespace pbac
