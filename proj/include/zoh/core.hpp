#pragma once

// Core vocabulary: the norm pair induced by an SPD matrix B, Hölder gradient
// classes, objectives, the bounded-error function oracle, and the Gaussian
// direction sampler.
//
// Conventions used throughout the library:
//   primal norm  ||x||   = sqrt(<Bx, x>)
//   dual norm    ||s||_* = sqrt(<s, B^{-1} s>)
// Directions u are sampled from N(0, B^{-1}), which makes ||u||^2 = <Bu, u>
// a chi-square with dim degrees of freedom and keeps the smoothing measure
// exp(-||u||^2/2) consistent with the norm in use.  With B = I (the default)
// this is the standard normal.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "zoh/rng.hpp"

namespace zoh {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Malformed input (dimensions, parameter ranges, unparsable config).
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// Objective evaluation produced a non-finite value.
class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& what, Vec at)
      : std::runtime_error(what), at_(std::move(at)) {}
  const Vec& at() const { return at_; }

 private:
  Vec at_;
};

// Gradient smoothness class: ||grad f(y) - grad f(x)||_* <= L ||y - x||^nu.
struct HolderClass {
  double nu = 1.0;
  double L = 1.0;

  HolderClass() = default;
  HolderClass(double nu_, double L_) : nu(nu_), L(L_) {
    if (!(nu >= 0.0 && nu <= 1.0)) throw UsageError("HolderClass: nu must be in [0,1]");
    if (!(L >= 0.0)) throw UsageError("HolderClass: L must be >= 0");
  }
};

class NormSpace {
 public:
  // Euclidean geometry, B = I_n.
  explicit NormSpace(int n) : n_(n), identity_(true) {
    if (n <= 0) throw UsageError("NormSpace: dimension must be positive");
  }

  // General SPD B.  The input must be symmetric up to round-off; it is
  // symmetrized exactly as (B + B^T)/2 before factorization.
  explicit NormSpace(Mat b) : n_(static_cast<int>(b.rows())), identity_(false) {
    if (b.rows() != b.cols() || n_ <= 0) throw UsageError("NormSpace: B must be square");
    const double scale = b.cwiseAbs().maxCoeff();
    const double asym = (b - b.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(scale, 1.0))
      throw UsageError("NormSpace: B is not symmetric");
    b_ = 0.5 * (b + b.transpose());
    llt_.compute(b_);
    if (llt_.info() != Eigen::Success)
      throw UsageError("NormSpace: B is not positive definite");
  }

  int dim() const { return n_; }
  bool is_identity() const { return identity_; }

  Mat b_matrix() const { return identity_ ? Mat(Mat::Identity(n_, n_)) : b_; }

  double norm_primal(const Vec& x) const {
    check_dim(x, "norm_primal");
    const double q = identity_ ? x.squaredNorm() : x.dot(b_ * x);
    return std::sqrt(std::max(q, 0.0));
  }

  double norm_dual(const Vec& s) const {
    check_dim(s, "norm_dual");
    const double q = identity_ ? s.squaredNorm() : s.dot(llt_.solve(s));
    return std::sqrt(std::max(q, 0.0));
  }

  Vec apply_b(const Vec& x) const {
    check_dim(x, "apply_b");
    return identity_ ? x : Vec(b_ * x);
  }

  Vec apply_b_inv(const Vec& s) const {
    check_dim(s, "apply_b_inv");
    return identity_ ? s : Vec(llt_.solve(s));
  }

  // Maps z ~ N(0, I) to u = L^{-T} z ~ N(0, B^{-1}), where B = L L^T.
  // ||u|| (primal) equals ||z||_2 exactly, so callers can reuse it for free.
  void whiten_into(const Vec& z, Vec& u) const {
    if (identity_) {
      u = z;
      return;
    }
    u = llt_.matrixU().solve(z);
  }

 private:
  void check_dim(const Vec& v, const char* where) const {
    if (v.size() != n_) {
      std::ostringstream os;
      os << "NormSpace::" << where << ": expected dimension " << n_ << ", got "
         << v.size();
      throw UsageError(os.str());
    }
  }

  int n_;
  bool identity_;
  Mat b_;
  Eigen::LLT<Mat> llt_;
};

// A real function with optional analytic gradient, a certified Hölder class,
// and a finite lower bound on its infimum (required by the iteration
// planners).
class Objective {
 public:
  virtual ~Objective() = default;
  virtual int dim() const = 0;
  virtual double eval(const Vec& x) const = 0;
  virtual bool has_grad() const { return false; }
  virtual Vec grad(const Vec& x) const {
    (void)x;
    throw UsageError("Objective: analytic gradient not available");
  }
  virtual HolderClass holder() const = 0;
  virtual double f_star_lower() const = 0;
};

// Bounded deviation added to exact function values.  Implementations must be
// deterministic functions of the query point (stochastic models derive their
// randomness from a hash of the point), so repeated or concurrent queries
// agree.
class NoiseModel {
 public:
  virtual ~NoiseModel() = default;
  virtual std::string name() const = 0;
  // |deviation(x, delta)| <= delta for all x.
  virtual double deviation(const Vec& x, double delta) const = 0;
};

class NoNoise final : public NoiseModel {
 public:
  std::string name() const override { return "none"; }
  double deviation(const Vec&, double) const override { return 0.0; }
};

// Inexact zeroth-order oracle: query(x) = f(x) + deviation(x), with the
// deviation bounded by delta in absolute value.  Thread-safe; counts calls.
class NoisyOracle {
 public:
  NoisyOracle(std::shared_ptr<const Objective> base, std::shared_ptr<const NoiseModel> noise,
              double delta)
      : base_(std::move(base)), noise_(std::move(noise)), delta_(delta) {
    if (!base_) throw UsageError("NoisyOracle: null objective");
    if (!noise_) noise_ = std::make_shared<NoNoise>();
    if (!(delta_ >= 0.0)) throw UsageError("NoisyOracle: delta must be >= 0");
  }

  double query(const Vec& x) const {
    const double f = base_->eval(x);
    if (!std::isfinite(f)) throw EvalError("objective evaluated to a non-finite value", x);
    calls_.fetch_add(1, std::memory_order_relaxed);
    if (delta_ == 0.0) return f;
    return f + noise_->deviation(x, delta_);
  }

  double delta() const { return delta_; }
  const Objective& base() const { return *base_; }
  std::shared_ptr<const Objective> base_ptr() const { return base_; }
  const NoiseModel& noise() const { return *noise_; }
  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
  void reset_calls() const { calls_.store(0, std::memory_order_relaxed); }

 private:
  std::shared_ptr<const Objective> base_;
  std::shared_ptr<const NoiseModel> noise_;
  double delta_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

// Draws u ~ N(0, B^{-1}).  Draw k of a given (seed, space) pair is a pure
// function of k, so batches can be generated in any order or in parallel and
// still reproduce the sequential stream.
class GaussianSampler {
 public:
  GaussianSampler(std::shared_ptr<const NormSpace> space, std::uint64_t seed)
      : space_(std::move(space)), rng_(seed) {
    if (!space_) throw UsageError("GaussianSampler: null space");
  }

  const NormSpace& space() const { return *space_; }
  std::shared_ptr<const NormSpace> space_ptr() const { return space_; }
  std::uint64_t seed() const { return rng_.seed(); }

  // Fills u with draw `index`; if norm_out is non-null it receives the primal
  // norm ||u|| (available exactly as ||z||_2 of the pre-whitened normals).
  // Safe to call concurrently for distinct indices.  Hot loops can pass a
  // scratch vector to avoid a per-draw allocation when B != I.
  void draw_at(std::uint64_t index, Vec& u, double* norm_out = nullptr,
               Vec* scratch = nullptr) const {
    const int n = space_->dim();
    if (space_->is_identity()) {
      u.resize(n);
      fill_normals(index, u);
      if (norm_out) *norm_out = u.norm();
      return;
    }
    Vec local;
    Vec& z = scratch ? *scratch : local;
    z.resize(n);
    fill_normals(index, z);
    if (norm_out) *norm_out = z.norm();
    space_->whiten_into(z, u);
  }

  Vec draw_at(std::uint64_t index) const {
    Vec u(space_->dim());
    draw_at(index, u);
    return u;
  }

  // Stateful convenience: returns the next draw in the stream.
  Vec sample() {
    Vec u(space_->dim());
    draw_at(next_++, u);
    return u;
  }

  std::uint64_t stream_index() const { return next_; }
  void skip_to(std::uint64_t index) { next_ = index; }

 private:
  void fill_normals(std::uint64_t index, Vec& z) const {
    const int n = static_cast<int>(z.size());
    double z0, z1;
    for (int j = 0; j + 1 < n; j += 2) {
      rng_.normal_pair(index, static_cast<std::uint64_t>(j / 2), z0, z1);
      z[j] = z0;
      z[j + 1] = z1;
    }
    if (n % 2 == 1) {
      rng_.normal_pair(index, static_cast<std::uint64_t>(n / 2), z0, z1);
      z[n - 1] = z0;
    }
  }

  std::shared_ptr<const NormSpace> space_;
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

}  // namespace zoh
