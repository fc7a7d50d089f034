#pragma once

namespace deepmatch {

/// l(z) = log(logit^{-1}(z)) + log 2, the per-point log-likelihood of a
/// logistic classifier relative to a coin flip. Bounded above by log 2 and
/// stable for large |z|.
double link_loss(double z);

/// l'(z) = logit^{-1}(-z).
double link_loss_slope(double z);

/// l''(z) = -logit^{-1}(z) logit^{-1}(-z).
double link_loss_curvature(double z);

/// Numerically stable logistic function.
double sigmoid(double z);

/// h(p) = p log p + (1-p) log(1-p) + log 2 with 0 log 0 = 0. Throws
/// PreconditionError outside [0, 1].
double binary_entropy_gap(double p);

/// h'(p) = log(p / (1-p)) on (0, 1).
double binary_entropy_gap_slope(double p);

}  // namespace deepmatch
