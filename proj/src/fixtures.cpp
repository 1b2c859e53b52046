#include "blmc/simdata.hpp"

namespace blmc {

namespace {

// sim2 loading table, responses by rows and factors by columns as usually
// tabulated; the model-order loading matrix is its transpose.
constexpr double kSim2LambdaByResponse[10][50] = {
    {-0.38, -0.33, 0.23,  -0.38, -0.13, 0.31,  0.28,  0.0,   0.42,  0.18,
     -0.15, -0.43, 0.27,  0.18,  0.38,  -0.4,  -0.27, -0.3,  -0.38, -0.09,
     0.08,  0.15,  0.11,  0.37,  0.25,  0.28,  0.13,  -0.18, 0.35,  0.17,
     0.42,  0.17,  -0.24, 0.05,  -0.0,  -0.41, -0.03, -0.0,  -0.22, 0.2,
     0.28,  0.27,  -0.45, -0.15, 0.05,  0.31,  0.16,  0.49,  0.12,  -0.43},
    {-0.39, -0.13, -0.13, -0.31, -0.15, 0.42,  0.13,  -0.07, 0.21,  0.1,
     0.28,  -0.24, -0.32, -0.08, -0.01, -0.31, 0.2,   0.31,  0.11,  -0.38,
     -0.32, -0.31, 0.24,  -0.29, -0.38, -0.1,  -0.19, 0.18,  -0.37, -0.34,
     0.26,  -0.22, 0.33,  -0.06, -0.06, -0.36, -0.31, 0.14,  -0.14, -0.1,
     0.14,  -0.16, 0.21,  -0.3,  0.36,  -0.29, 0.17,  0.16,  -0.35, -0.05},
    {0.01,  0.48,  0.32,  0.13,  -0.46, 0.27,  0.09,  0.12,  0.25,  0.38,
     -0.38, -0.42, -0.16, -0.37, -0.22, 0.09,  -0.08, -0.07, -0.33, 0.01,
     0.45,  0.19,  0.34,  -0.36, 0.43,  0.44,  -0.13, -0.26, -0.46, -0.08,
     0.09,  0.43,  0.04,  -0.35, 0.42,  0.19,  0.33,  -0.12, 0.4,   -0.32,
     -0.2,  -0.31, 0.11,  -0.46, 0.41,  0.09,  -0.24, -0.21, 0.4,   -0.05},
    {0.13,  0.48,  -0.47, -0.48, -0.34, -0.09, -0.28, -0.21, -0.19, 0.44,
     -0.42, -0.22, 0.44,  0.09,  0.25,  0.12,  0.1,   -0.33, -0.41, 0.42,
     0.38,  -0.48, -0.22, -0.14, 0.5,   0.08,  0.02,  -0.07, 0.07,  -0.3,
     -0.13, 0.36,  0.02,  0.02,  0.34,  0.06,  -0.32, -0.47, 0.02,  0.34,
     0.44,  0.44,  0.41,  -0.22, 0.36,  -0.45, -0.19, 0.46,  0.49,  -0.28},
    {-0.47, 0.46,  0.24,  -0.45, 0.44,  -0.29, -0.36, -0.46, 0.34,  -0.44,
     0.42,  0.48,  -0.06, 0.07,  0.43,  0.12,  -0.15, 0.29,  0.1,   -0.32,
     -0.49, -0.48, 0.34,  0.1,   -0.01, 0.2,   0.33,  0.37,  0.1,   0.21,
     0.27,  -0.35, -0.12, 0.5,   0.33,  0.33,  -0.27, 0.39,  0.45,  0.27,
     -0.34, -0.5,  -0.33, -0.37, 0.33,  -0.31, -0.37, 0.05,  -0.38, -0.14},
    {0.21,  0.12,  -0.46, 0.29,  0.36,  0.17,  0.03,  0.2,   -0.12, -0.23,
     -0.15, -0.03, -0.42, 0.01,  0.05,  0.33,  -0.46, 0.12,  0.22,  -0.44,
     0.1,   0.11,  -0.33, -0.16, 0.06,  0.25,  -0.37, -0.1,  -0.16, -0.13,
     0.38,  0.11,  0.05,  0.38,  -0.34, -0.19, -0.12, 0.39,  0.2,   0.31,
     0.33,  0.46,  -0.35, -0.42, -0.01, -0.48, -0.33, -0.23, -0.07, 0.09},
    {-0.2,  0.48,  0.18,  -0.1,  0.13,  -0.13, -0.41, -0.04, -0.07, -0.22,
     0.28,  -0.08, -0.41, 0.13,  0.03,  0.22,  0.08,  0.32,  0.02,  -0.41,
     0.45,  0.02,  -0.21, 0.16,  0.37,  -0.2,  -0.44, -0.37, 0.46,  0.25,
     0.16,  0.31,  0.02,  -0.43, 0.13,  0.33,  -0.34, -0.1,  0.41,  -0.46,
     0.21,  -0.49, -0.31, -0.04, 0.23,  0.43,  0.22,  0.23,  -0.25, -0.45},
    {-0.19, 0.28,  0.47,  -0.42, 0.17,  -0.18, -0.03, -0.13, -0.04, 0.3,
     0.35,  -0.39, 0.37,  -0.47, -0.08, -0.01, 0.09,  0.06,  -0.21, 0.38,
     0.34,  0.31,  0.06,  -0.25, 0.37,  0.12,  0.27,  -0.35, 0.09,  -0.28,
     0.32,  -0.2,  -0.18, -0.05, 0.2,   -0.17, -0.06, 0.49,  -0.06, 0.3,
     -0.08, 0.35,  0.01,  0.25,  -0.07, -0.29, -0.05, 0.19,  -0.07, -0.14},
    {-0.04, 0.27,  -0.23, -0.07, -0.09, -0.39, -0.48, -0.27, 0.19,  0.21,
     -0.38, 0.2,   -0.21, 0.21,  -0.11, 0.27,  0.2,   0.17,  0.31,  -0.12,
     -0.2,  -0.12, -0.41, 0.23,  -0.23, -0.07, -0.34, 0.37,  -0.43, 0.18,
     0.44,  -0.05, 0.06,  -0.22, -0.16, -0.43, 0.04,  -0.23, -0.22, 0.11,
     -0.4,  -0.38, 0.07,  0.23,  0.43,  -0.05, 0.08,  0.03,  0.09,  0.02},
    {-0.03, -0.18, -0.08, -0.12, 0.35,  0.3,   -0.33, 0.34,  0.38,  0.31,
     0.36,  -0.09, -0.16, -0.06, 0.43,  -0.04, -0.07, 0.4,   -0.39, -0.06,
     0.36,  0.14,  0.47,  0.3,   0.36,  -0.09, 0.1,   -0.01, 0.11,  0.43,
     -0.23, -0.34, 0.45,  -0.47, 0.03,  -0.09, -0.47, 0.28,  0.27,  -0.4,
     -0.13, -0.08, -0.18, -0.02, -0.38, -0.07, 0.41,  0.18,  -0.31, 0.35}};

constexpr double kSim2Decay[50] = {
    11.36, 13.43, 10.22, 6.87,  5.89, 10.09, 9.17,  2.75,  5.35, 3.43,
    4.09,  7.81,  12.52, 9.54,  5.56, 7.7,   5.44,  7.49,  9.12, 5.2,
    10.61, 5.63,  5.5,   11.65, 4.64, 13.16, 9.51,  11.77, 8.8,  13.43,
    7.89,  11.62, 6.4,   12.95, 8.48, 2.5,   12.95, 13.42, 9.59, 6.31,
    8.98,  4.57,  6.63,  11.25, 4.43, 4.94,  3.3,   9.66,  13.5, 8.7};

constexpr double kSim2Beta[3][10] = {
    {1.0, -1.0, 1.0, -0.5, 2.0, -1.5, 0.5, 0.3, -2.0, 1.5},
    {-5.0, 2.0, 3.0, -2.0, -6.0, 4.0, 5.0, -3.0, 6.0, -4.0},
    {8.0, 6.9, -12.0, 0.0, -4.0, 7.7, -8.8, 3.3, 6.6, -5.5}};

constexpr double kSim2SigmaDiag[10] = {0.5, 1.0, 0.4, 2.0, 0.6,
                                       2.5, 3.0, 0.45, 1.5, 0.5};

}  // namespace

GenerativeSpec builtin_fixture(const std::string& name) {
  GenerativeSpec spec;
  if (name == "sim1") {
    spec.n = 1200;
    spec.q = 2;
    spec.p = 2;
    spec.num_factors = 2;
    spec.beta.resize(2, 2);
    spec.beta << 1.0, -1.0, -5.0, 2.0;
    spec.lambda.resize(2, 2);
    spec.lambda << 1.0, 1.0, 0.0, 2.0;
    spec.sigma.resize(2, 2);
    spec.sigma << 0.4, 0.15, 0.15, 0.3;
    spec.decay.resize(2);
    spec.decay << 6.0, 18.0;
    spec.n_holdout = 200;
    return spec;
  }
  if (name == "sim2") {
    spec.n = 1200;
    spec.q = 10;
    spec.p = 3;
    spec.num_factors = 50;
    spec.beta.resize(3, 10);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 10; ++j) spec.beta(i, j) = kSim2Beta[i][j];
    }
    spec.lambda.resize(50, 10);
    for (int k = 0; k < 50; ++k) {
      for (int r = 0; r < 10; ++r) spec.lambda(k, r) = kSim2LambdaByResponse[r][k];
    }
    spec.sigma = Matrix::Zero(10, 10);
    for (int j = 0; j < 10; ++j) spec.sigma(j, j) = kSim2SigmaDiag[j];
    spec.decay.resize(50);
    for (int k = 0; k < 50; ++k) spec.decay[k] = kSim2Decay[k];
    spec.n_holdout = 200;
    return spec;
  }
  throw ConfigError("unknown fixture: " + name);
}

}  // namespace blmc
