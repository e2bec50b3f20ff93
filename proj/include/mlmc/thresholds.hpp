#pragma once

// Acceptance thresholds shared by the CLI summaries and the acceptance suite.

#include <array>
#include <cstdint>

namespace mlmc::thresholds {

// Monte-Carlo assertions: estimate <= bound + kSe * standard error.
inline constexpr double kSe = 3.0;

// 1. Telescoping exactness of the deterministic-stub MLMC expectation.
inline constexpr double kTelescopeTolerance = 1e-12;
inline constexpr std::array<std::int64_t, 4> kTelescopeTmax = {2, 8, 64, 1024};

// 2. ODC contract for EpochSGD: mean ||x - x*||^2 <= c G^2/(mu^2 T).
inline constexpr double kOdcConstant = 32.0;
inline constexpr int kOdcMinExponent = 5;
inline constexpr int kOdcMaxExponent = 12;
inline constexpr std::int64_t kOdcReplications = 500;

// 3/4. Bias and variance laws of a single MLMC draw.
inline constexpr int kBiasMinExponent = 6;
inline constexpr int kBiasMaxExponent = 14;
inline constexpr std::int64_t kBiasDraws = 100'000;
inline constexpr double kBiasSlopeMax = -0.4;
// variance <= kVarianceFactor * (G/mu)^2 * log2(T_max).
inline constexpr double kVarianceFactor = 16.0 * 32.0;

// 5. Expected cost 1 + 1.5 floor(log2 T_max) with the unit-cost stub.
inline constexpr std::int64_t kCostDraws = 100'000;
inline constexpr std::array<std::int64_t, 5> kCostTmax = {2, 8, 64, 1024, 16384};

// 6. MorGradEst bias and MSE.
inline constexpr std::int64_t kMoreauCalls = 100'000;
inline constexpr std::array<std::array<double, 2>, 2> kMoreauTargets = {{{0.05, 0.25}, {0.01, 0.1}}};

// 7. Rejection sampler.
inline constexpr std::int64_t kSamplerDraws = 100'000;
inline constexpr double kChiSquareSignificance = 1e-3;
inline constexpr double kMinAcceptance = 0.1353352832366127;  // e^-2

// 8. Projection-efficient AGD: eps as fractions of G D.
inline constexpr std::array<double, 3> kProjEffFractions = {0.2, 0.1, 0.05};
inline constexpr double kProjEffGapFraction = 0.1;
inline constexpr std::int64_t kProjEffRuns = 20;
inline constexpr double kProjEffSlopeMin = 1.6;
inline constexpr double kProjEffSlopeMax = 2.4;

// 9. Min-the-max success count.
inline constexpr double kMinMaxEpsFraction = 0.05;
inline constexpr int kMinMaxRuns = 10;
inline constexpr int kMinMaxSuccesses = 5;

// 10. Composite rate gap <= kCompositeConstant L R^2 / N^2.
inline constexpr double kCompositeConstant = 8.0;
inline constexpr std::array<std::int64_t, 3> kCompositeIterations = {20, 40, 80};

// 11. Unbiased estimator.
inline constexpr double kUnbiasedStubTolerance = 1e-12;
inline constexpr std::int64_t kUnbiasedDraws = 100'000;
// mean first-order queries <= 4 log2(n d) + 8.
inline constexpr double kUnbiasedQuerySlope = 4.0;
inline constexpr double kUnbiasedQueryOffset = 8.0;

// 12. Ellipsoid error bound on every run.
inline constexpr std::array<std::int64_t, 3> kEllipsoidBudgets = {8, 16, 32};

// 13. Budget capping: success >= 1/4 - 3 SE with cap = 2 x mean queries.
inline constexpr double kCapMultiplier = 2.0;
inline constexpr int kCapRuns = 40;
inline constexpr double kCapSuccessFloor = 0.25;

}  // namespace mlmc::thresholds
