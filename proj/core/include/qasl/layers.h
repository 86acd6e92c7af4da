#ifndef QASL_LAYERS_H_
#define QASL_LAYERS_H_

#include <vector>

#include <Eigen/Core>

#include "qasl/parameters.h"
#include "qasl/types.h"

// Dense building blocks with explicit backward passes. Activations are
// laid out one row per token.
namespace qasl::nn {

using Matrix = Eigen::MatrixXd;

// Destination for parameter gradients. Parameters outside `wanted` (when
// set) are skipped, including the work to compute their gradient.
struct GradSink {
  GradientBuffer* grads = nullptr;
  const std::vector<bool>* wanted = nullptr;

  bool Wants(size_t index) const {
    return grads != nullptr && (wanted == nullptr || (*wanted)[index]);
  }
};

struct LinearRef {
  size_t weight = 0;  // [in, out]
  size_t bias = 0;    // [1, out]
};

Matrix LinearForward(const ParameterStore& ps, const LinearRef& ref, const Matrix& x);
// Accumulates parameter gradients into `sink`; returns dL/dx.
Matrix LinearBackward(const ParameterStore& ps, const LinearRef& ref, const Matrix& x,
                      const Matrix& dy, const GradSink& sink);
void LinearBackwardParamsOnly(const LinearRef& ref, const Matrix& x, const Matrix& dy,
                              const GradSink& sink);

struct LayerNormRef {
  size_t gamma = 0;  // [1, E]
  size_t beta = 0;   // [1, E]
};

struct LayerNormCache {
  Matrix normalized;
  Eigen::VectorXd inv_std;
};

inline constexpr double kLayerNormEps = 1e-5;

Matrix LayerNormForward(const ParameterStore& ps, const LayerNormRef& ref, const Matrix& x,
                        LayerNormCache* cache);
Matrix LayerNormBackward(const ParameterStore& ps, const LayerNormRef& ref,
                         const LayerNormCache& cache, const Matrix& dy, const GradSink& sink);

Matrix Activate(Nonlinearity fn, const Matrix& pre);
Matrix ActivateBackward(Nonlinearity fn, const Matrix& pre, const Matrix& dy);

struct AttentionRef {
  LinearRef query;
  LinearRef key;
  LinearRef value;
  LinearRef output;
  int num_heads = 1;
};

struct AttentionCache {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> probs;  // per head, [L, L]
  Matrix merged;              // concatenated head outputs, [L, E]
};

Matrix AttentionForward(const ParameterStore& ps, const AttentionRef& ref, const Matrix& x,
                        AttentionCache* cache);
Matrix AttentionBackward(const ParameterStore& ps, const AttentionRef& ref,
                         const AttentionCache& cache, const Matrix& dy, const GradSink& sink);

}  // namespace qasl::nn

#endif  // QASL_LAYERS_H_
