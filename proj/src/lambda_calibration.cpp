#include "pointmac/lambda_calibration.hpp"

#include <cmath>
#include <stdexcept>

namespace pointmac {

LambdaFormKind lambda_form_from_str(const std::string& s) {
  if (s == "softmax") return LambdaFormKind::kSoftmax;
  if (s == "ratio") return LambdaFormKind::kRatio;
  throw std::invalid_argument("unknown lambda form: " + s);
}

std::string lambda_form_str(LambdaFormKind form) {
  return form == LambdaFormKind::kSoftmax ? "softmax" : "ratio";
}

LambdaWeights compute_weights(double lambda_smr, double lambda_ad,
                              LambdaFormKind form) {
  if (!std::isfinite(lambda_smr) || !std::isfinite(lambda_ad)) {
    throw std::invalid_argument("lambda weights: non-finite logit");
  }
  LambdaWeights w;
  if (form == LambdaFormKind::kSoftmax) {
    // exp(log(1 + l^2)) == 1 + l^2, so the softmax collapses to a ratio of
    // the shifted squares
    double u = 1.0 + lambda_smr * lambda_smr;
    double v = 1.0 + lambda_ad * lambda_ad;
    w.w_smr = u / (u + v);
  } else {
    double a = std::log1p(lambda_smr * lambda_smr);
    double b = std::log1p(lambda_ad * lambda_ad);
    w.w_smr = (a + b == 0.0) ? 0.5 : a / (a + b);
  }
  w.w_ad = 1.0 - w.w_smr;
  return w;
}

double adaptive_aux_loss(double l_smr, double l_ad, double lambda_smr,
                         double lambda_ad, LambdaFormKind form) {
  LambdaWeights w = compute_weights(lambda_smr, lambda_ad, form);
  return w.w_smr * l_smr + w.w_ad * l_ad;
}

LambdaGrad adaptive_aux_loss_grad(double l_smr, double l_ad, double lambda_smr,
                                  double lambda_ad, LambdaFormKind form) {
  if (!std::isfinite(lambda_smr) || !std::isfinite(lambda_ad)) {
    throw std::invalid_argument("lambda grad: non-finite logit");
  }
  // d(loss)/d(lambda) = (l_smr - l_ad) * d(w_smr)/d(lambda)
  const double diff = l_smr - l_ad;
  LambdaGrad g;
  if (form == LambdaFormKind::kSoftmax) {
    double u = 1.0 + lambda_smr * lambda_smr;
    double v = 1.0 + lambda_ad * lambda_ad;
    double denom = (u + v) * (u + v);
    g.d_smr = diff * 2.0 * lambda_smr * v / denom;
    g.d_ad = diff * -2.0 * lambda_ad * u / denom;
  } else {
    double a = std::log1p(lambda_smr * lambda_smr);
    double b = std::log1p(lambda_ad * lambda_ad);
    double s = a + b;
    if (s == 0.0) {
      // the guarded point: weights pinned at 0.5, treated as stationary
      g.d_smr = 0.0;
      g.d_ad = 0.0;
    } else {
      double da = 2.0 * lambda_smr / (1.0 + lambda_smr * lambda_smr);
      double db = 2.0 * lambda_ad / (1.0 + lambda_ad * lambda_ad);
      g.d_smr = diff * b / (s * s) * da;
      g.d_ad = diff * -a / (s * s) * db;
    }
  }
  return g;
}

void update_lambda(double& lambda_smr, double& lambda_ad,
                   const LambdaGrad& grad, double eta_lambda) {
  if (!std::isfinite(grad.d_smr) || !std::isfinite(grad.d_ad)) {
    throw std::runtime_error("lambda update: non-finite gradient");
  }
  lambda_smr -= eta_lambda * grad.d_smr;
  lambda_ad -= eta_lambda * grad.d_ad;
}

}  // namespace pointmac
