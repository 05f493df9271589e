#pragma once

#include <string>

namespace pointmac {

// Two algebraic forms for turning the two loss-balance logits into convex
// weights. The softmax form is total everywhere (0.5/0.5 at zero logits);
// the ratio form normalizes log(1 + lambda^2) terms by their sum and is
// guarded to 0.5/0.5 at the zero-logit singularity.
enum class LambdaFormKind { kSoftmax, kRatio };

LambdaFormKind lambda_form_from_str(const std::string& s);
std::string lambda_form_str(LambdaFormKind form);

struct LambdaWeights {
  double w_smr = 0.5;
  double w_ad = 0.5;  // always computed as 1 - w_smr
};

// Throws std::invalid_argument on non-finite logits.
LambdaWeights compute_weights(double lambda_smr, double lambda_ad,
                              LambdaFormKind form = LambdaFormKind::kSoftmax);

// w_smr * l_smr + w_ad * l_ad.
double adaptive_aux_loss(double l_smr, double l_ad, double lambda_smr,
                         double lambda_ad,
                         LambdaFormKind form = LambdaFormKind::kSoftmax);

struct LambdaGrad {
  double d_smr = 0.0;  // d(adaptive loss)/d(lambda_smr)
  double d_ad = 0.0;
};

// Closed-form gradient of the adaptive loss in the logits, holding the two
// loss values fixed.
LambdaGrad adaptive_aux_loss_grad(
    double l_smr, double l_ad, double lambda_smr, double lambda_ad,
    LambdaFormKind form = LambdaFormKind::kSoftmax);

// Plain gradient descent on the logits; throws std::runtime_error on a
// non-finite gradient.
void update_lambda(double& lambda_smr, double& lambda_ad,
                   const LambdaGrad& grad, double eta_lambda);

}  // namespace pointmac
