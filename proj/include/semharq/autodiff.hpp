#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "semharq/tensor.hpp"

namespace semharq {

struct Node;
using Var = std::shared_ptr<Node>;

/// One node of the dynamically built computation graph. Leaf nodes are
/// either constants or named parameters; interior nodes carry a backprop
/// closure that routes this node's gradient into its parents.
struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily, same shape as value
    std::vector<Var> parents;
    std::function<void(Node&)> backprop;
    bool requires_grad = false;
    std::string name;  // nonempty for parameters

    Tensor& ensure_grad();
    void zero_grad();
};

Var constant(Tensor value);
Var make_parameter(Tensor value, std::string name);

/// Generic op factory so modules outside the substrate (e.g. the channel)
/// can register differentiable operations.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop);

// Core differentiable operations. All of them evaluate eagerly and record
// the backward closure.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var add_rowvec(const Var& a, const Var& bias);  // bias shape [cols]
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double k);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var softmax_rows(const Var& a);
Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var slice_cols(const Var& a, std::size_t c0, std::size_t c1);
Var concat_cols(const std::vector<Var>& parts);
Var embedding_lookup(const Var& table, const std::vector<int>& ids);
Var mean_rows(const Var& a, std::size_t n_rows);  // mean over the first n_rows -> [1 x cols]
Var power_normalize(const Var& a);                // mean squared entry == 1

// Losses (scalar outputs, shape {1}).
Var cross_entropy_rows(const Var& logits, const std::vector<int>& targets);
Var bce_with_logits(const Var& logits, const std::vector<double>& labels);
Var mse_loss(const Var& pred, const Tensor& target);  // mean over rows of ||diff||^2
Var sum_all(const Var& a);

/// Reverse-mode backprop from a scalar loss. Throws std::logic_error when
/// the loss is not a scalar or no graph is attached to it.
void backward(const Var& loss);

void zero_grad(const std::vector<Var>& params);

struct GradCheckEntry {
    std::string name;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::vector<GradCheckEntry> entries;
    bool pass(double tolerance) const { return max_rel_error <= tolerance; }
};

/// Compares analytic gradients against central finite differences. The
/// loss builder must rebuild the graph from the current parameter values
/// on every call. `max_entries_per_param` caps the probed entries per
/// tensor (sampled deterministically when an Rng is supplied).
GradCheckReport gradient_check(const std::function<Var()>& loss_builder,
                               const std::vector<Var>& params, double h = 1e-5,
                               std::size_t max_entries_per_param = SIZE_MAX,
                               Rng* rng = nullptr);

}  // namespace semharq
