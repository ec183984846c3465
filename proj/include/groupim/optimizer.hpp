#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace groupim {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Per-tensor adaptive-moment state with bias correction. A zero gradient
/// at step one leaves the parameter untouched.
template <typename Mat>
class AdamTensor {
 public:
  void step(Mat& param, const Mat& grad, const AdamConfig& c) {
    if (t_ == 0) {
      m_ = Mat::Zero(param.rows(), param.cols());
      v_ = Mat::Zero(param.rows(), param.cols());
    }
    ++t_;
    m_ = c.beta1 * m_ + (1.0 - c.beta1) * grad;
    v_ = (c.beta2 * v_.array() + (1.0 - c.beta2) * grad.array().square()).matrix();
    double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
    param.array() -= c.lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + c.eps);
  }

  long steps() const { return t_; }

 private:
  Mat m_, v_;
  long t_ = 0;
};

}  // namespace groupim
