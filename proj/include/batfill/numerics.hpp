#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "batfill/sequence.hpp"
#include "batfill/tensor.hpp"

namespace batfill {

// Handle to a node on a Tape.
struct Var {
    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::size_t id = kNone;
    bool valid() const { return id != kNone; }
};

// Define-by-run reverse-mode record. Operations append nodes in execution
// order; backward() walks them in reverse. A Tape is single-threaded; use
// one per concurrent forward pass.
class Tape {
public:
    using Backward = std::function<void(Tape&, std::size_t self)>;

    // recording = false gives a value-only tape (no closures, no grads).
    explicit Tape(bool recording = true) : recording_(recording) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return recording_; }

    // References `external` without copying; it must outlive the tape.
    Var input(const Tensor& external, bool requires_grad);
    Var constant(Tensor value);
    Var push(Tensor value, bool requires_grad, Backward backward);

    const Tensor& value(Var v) const;
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    // Gradient buffer, allocated as zeros on first access.
    Tensor& grad(Var v);
    bool has_grad(Var v) const { return nodes_[v.id].grad.size() > 0 || value(v).size() == 0; }

    // Seeds d(loss)/d(loss) = 1 for a single-element loss and propagates.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor owned;
        const Tensor* external = nullptr;
        Tensor grad;
        bool requires_grad = false;
        Backward backward;
    };
    bool recording_;
    std::vector<Node> nodes_;
};

// ---- value kernels (no tape) ----

Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// Softmax over the allowed entries of each row; disallowed entries are 0.
Tensor masked_softmax(const Tensor& logits, const AttentionMask& allowed);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
double gelu(double x);
double gelu_derivative(double x);
// Mean over rows of -log softmax(row)[target].
double mean_nll(const Tensor& logits, std::span<const int> targets);

// ---- differentiable operations ----

Var matmul(Tape& tape, Var a, Var b);
Var matmul_nt(Tape& tape, Var a, Var b);
Var add(Tape& tape, Var a, Var b);
Var mul(Tape& tape, Var a, Var b);
Var add_row(Tape& tape, Var x, Var bias);  // x[m x n] + bias[n] per row
Var scale(Tape& tape, Var x, double factor);
Var masked_softmax(Tape& tape, Var logits, const AttentionMask& allowed);
Var layer_norm(Tape& tape, Var x, Var gain, Var bias, double eps = 1e-5);
Var gelu(Tape& tape, Var x);
Var embedding(Tape& tape, Var table, std::span<const int> ids);
Var embedding(Tape& tape, Var table, std::span<const std::size_t> ids);
Var columns(Tape& tape, Var x, std::size_t begin, std::size_t count);
Var concat_columns(Tape& tape, std::span<const Var> parts);
Var select_rows(Tape& tape, Var x, std::span<const std::size_t> rows);
Var cross_entropy(Tape& tape, Var logits, std::span<const int> targets);
Var sum(Tape& tape, Var x);

// ---- finite-difference check ----

struct GradCheckOptions {
    double eps = 1e-5;
    // Elements checked per tensor; 0 = all of them.
    std::size_t max_per_tensor = 0;
    std::uint64_t seed = 0;
    // Denominator floor for the relative error.
    double floor = 1e-6;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    double max_absolute_error = 0.0;
    std::size_t checked = 0;
};

// Builds the loss on a tape whose first params.size() inputs are the
// parameters, in order.
using LossBuilder = std::function<Var(Tape&, std::span<const Var> params)>;

// Compares reverse-mode gradients with central differences
// (f(p+eps) - f(p-eps)) / 2eps. Relative error is
// |analytic - numeric| / max(|analytic| + |numeric|, floor).
GradCheckResult grad_check(const LossBuilder& loss_fn, std::span<Tensor* const> params,
                           const GradCheckOptions& options = {});

}  // namespace batfill
