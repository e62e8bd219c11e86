#include "semharq/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace semharq {

Tensor& Node::ensure_grad() {
    if (grad.data.empty()) grad = Tensor::zeros(value.shape);
    return grad;
}

void Node::zero_grad() {
    if (grad.data.empty()) {
        grad = Tensor::zeros(value.shape);
    } else {
        grad.fill(0.0);
    }
}

Var constant(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return n;
}

Var make_parameter(Tensor value, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    n->name = std::move(name);
    n->zero_grad();
    return n;
}

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents) {
        if (p->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    if (n->requires_grad) n->backprop = std::move(backprop);
    return n;
}

namespace {

void check_matrix(const Var& a, const char* op) {
    if (a->value.rank() != 2) {
        throw std::invalid_argument(std::string(op) + ": expected a matrix, got " +
                                    a->value.shape_str());
    }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
    Tensor out = matmul(a->value, b->value);
    return make_op(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) {
            Tensor da = matmul(self.grad, transpose(b->value));
            Tensor& ga = a->ensure_grad();
            for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += da.data[i];
        }
        if (b->requires_grad) {
            Tensor db = matmul(transpose(a->value), self.grad);
            Tensor& gb = b->ensure_grad();
            for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += db.data[i];
        }
    });
}

Var transpose(const Var& a) {
    check_matrix(a, "transpose");
    return make_op(transpose(a->value), {a}, [a](Node& self) {
        if (!a->requires_grad) return;
        Tensor gt = transpose(self.grad);
        Tensor& ga = a->ensure_grad();
        for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += gt.data[i];
    });
}

Var add(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) {
        throw std::invalid_argument("add: shape mismatch " + a->value.shape_str() + " vs " +
                                    b->value.shape_str());
    }
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b->value.data[i];
    return make_op(std::move(out), {a, b}, [a, b](Node& self) {
        for (const Var& p : {a, b}) {
            if (!p->requires_grad) continue;
            Tensor& g = p->ensure_grad();
            for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += self.grad.data[i];
        }
    });
}

Var add_rowvec(const Var& a, const Var& bias) {
    check_matrix(a, "add_rowvec");
    const std::size_t cols = a->value.cols();
    if (bias->value.size() != cols) {
        throw std::invalid_argument("add_rowvec: bias length mismatch");
    }
    Tensor out = a->value;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) out.data[r * cols + c] += bias->value.data[c];
    return make_op(std::move(out), {a, bias}, [a, bias, cols](Node& self) {
        if (a->requires_grad) {
            Tensor& ga = a->ensure_grad();
            for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += self.grad.data[i];
        }
        if (bias->requires_grad) {
            Tensor& gb = bias->ensure_grad();
            const std::size_t rows = self.value.rows();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) gb.data[c] += self.grad.data[r * cols + c];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("sub: shape mismatch");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b->value.data[i];
    return make_op(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) {
            Tensor& g = a->ensure_grad();
            for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += self.grad.data[i];
        }
        if (b->requires_grad) {
            Tensor& g = b->ensure_grad();
            for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] -= self.grad.data[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("mul: shape mismatch");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b->value.data[i];
    return make_op(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) {
            Tensor& g = a->ensure_grad();
            for (std::size_t i = 0; i < g.data.size(); ++i)
                g.data[i] += self.grad.data[i] * b->value.data[i];
        }
        if (b->requires_grad) {
            Tensor& g = b->ensure_grad();
            for (std::size_t i = 0; i < g.data.size(); ++i)
                g.data[i] += self.grad.data[i] * a->value.data[i];
        }
    });
}

Var scale(const Var& a, double k) {
    Tensor out = a->value;
    for (double& v : out.data) v *= k;
    return make_op(std::move(out), {a}, [a, k](Node& self) {
        if (!a->requires_grad) return;
        Tensor& g = a->ensure_grad();
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += k * self.grad.data[i];
    });
}

Var relu(const Var& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return make_op(std::move(out), {a}, [a](Node& self) {
        if (!a->requires_grad) return;
        Tensor& g = a->ensure_grad();
        for (std::size_t i = 0; i < g.data.size(); ++i)
            if (a->value.data[i] > 0.0) g.data[i] += self.grad.data[i];
    });
}

Var sigmoid(const Var& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return make_op(std::move(out), {a}, [a](Node& self) {
        if (!a->requires_grad) return;
        Tensor& g = a->ensure_grad();
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            const double s = self.value.data[i];
            g.data[i] += self.grad.data[i] * s * (1.0 - s);
        }
    });
}

Var softmax_rows(const Var& a) {
    check_matrix(a, "softmax_rows");
    Tensor out = softmax_rows(a->value);
    return make_op(std::move(out), {a}, [a](Node& self) {
        if (!a->requires_grad) return;
        Tensor& g = a->ensure_grad();
        const std::size_t rows = self.value.rows(), cols = self.value.cols();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* s = &self.value.data[r * cols];
            const double* go = &self.grad.data[r * cols];
            double inner = 0.0;
            for (std::size_t c = 0; c < cols; ++c) inner += go[c] * s[c];
            for (std::size_t c = 0; c < cols; ++c) g.data[r * cols + c] += s[c] * (go[c] - inner);
        }
    });
}

Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps) {
    check_matrix(x, "layer_norm_rows");
    const std::size_t rows = x->value.rows(), cols = x->value.cols();
    if (gamma->value.size() != cols || beta->value.size() != cols) {
        throw std::invalid_argument("layer_norm_rows: affine parameter size mismatch");
    }
    Tensor out({rows, cols});
    Tensor xhat({rows, cols});
    std::vector<double> inv_sigma(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = &x->value.data[r * cols];
        double mu = 0.0;
        for (std::size_t c = 0; c < cols; ++c) mu += row[c];
        mu /= static_cast<double>(cols);
        double var = 0.0;
        for (std::size_t c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
        var /= static_cast<double>(cols);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_sigma[r] = is;
        for (std::size_t c = 0; c < cols; ++c) {
            const double xh = (row[c] - mu) * is;
            xhat.data[r * cols + c] = xh;
            out.data[r * cols + c] = gamma->value.data[c] * xh + beta->value.data[c];
        }
    }
    auto xhat_p = std::make_shared<Tensor>(std::move(xhat));
    auto isig_p = std::make_shared<std::vector<double>>(std::move(inv_sigma));
    return make_op(std::move(out), {x, gamma, beta},
                   [x, gamma, beta, xhat_p, isig_p, rows, cols](Node& self) {
        if (gamma->requires_grad) {
            Tensor& gg = gamma->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c)
                    gg.data[c] += self.grad.data[r * cols + c] * xhat_p->data[r * cols + c];
        }
        if (beta->requires_grad) {
            Tensor& gb = beta->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) gb.data[c] += self.grad.data[r * cols + c];
        }
        if (x->requires_grad) {
            Tensor& gx = x->ensure_grad();
            const double inv_n = 1.0 / static_cast<double>(cols);
            for (std::size_t r = 0; r < rows; ++r) {
                double mean_gy = 0.0, mean_gy_xhat = 0.0;
                for (std::size_t c = 0; c < cols; ++c) {
                    const double gy = self.grad.data[r * cols + c] * gamma->value.data[c];
                    mean_gy += gy;
                    mean_gy_xhat += gy * xhat_p->data[r * cols + c];
                }
                mean_gy *= inv_n;
                mean_gy_xhat *= inv_n;
                for (std::size_t c = 0; c < cols; ++c) {
                    const double gy = self.grad.data[r * cols + c] * gamma->value.data[c];
                    gx.data[r * cols + c] +=
                        (*isig_p)[r] * (gy - mean_gy - xhat_p->data[r * cols + c] * mean_gy_xhat);
                }
            }
        }
    });
}

Var slice_cols(const Var& a, std::size_t c0, std::size_t c1) {
    check_matrix(a, "slice_cols");
    const std::size_t rows = a->value.rows(), cols = a->value.cols();
    if (c0 >= c1 || c1 > cols) throw std::invalid_argument("slice_cols: bad range");
    Tensor out({rows, c1 - c0});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = c0; c < c1; ++c) out.data[r * (c1 - c0) + (c - c0)] = a->value.data[r * cols + c];
    return make_op(std::move(out), {a}, [a, c0, c1, rows, cols](Node& self) {
        if (!a->requires_grad) return;
        Tensor& g = a->ensure_grad();
        const std::size_t w = c1 - c0;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < w; ++c)
                g.data[r * cols + c0 + c] += self.grad.data[r * w + c];
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
    const std::size_t rows = parts[0]->value.rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        check_matrix(p, "concat_cols");
        if (p->value.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
        total += p->value.cols();
    }
    Tensor out({rows, total});
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t w = p->value.cols();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < w; ++c) out.data[r * total + off + c] = p->value.data[r * w + c];
        off += w;
    }
    return make_op(std::move(out), parts, [parts, rows, total](Node& self) {
        std::size_t off = 0;
        for (const auto& p : parts) {
            const std::size_t w = p->value.cols();
            if (p->requires_grad) {
                Tensor& g = p->ensure_grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < w; ++c)
                        g.data[r * w + c] += self.grad.data[r * total + off + c];
            }
            off += w;
        }
    });
}

Var embedding_lookup(const Var& table, const std::vector<int>& ids) {
    check_matrix(table, "embedding_lookup");
    const std::size_t vocab = table->value.rows(), dim = table->value.cols();
    Tensor out({ids.size(), dim});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
            throw std::invalid_argument("embedding_lookup: id out of range");
        }
        for (std::size_t c = 0; c < dim; ++c)
            out.data[i * dim + c] = table->value.data[static_cast<std::size_t>(ids[i]) * dim + c];
    }
    return make_op(std::move(out), {table}, [table, ids, dim](Node& self) {
        if (!table->requires_grad) return;
        Tensor& g = table->ensure_grad();
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t c = 0; c < dim; ++c)
                g.data[static_cast<std::size_t>(ids[i]) * dim + c] += self.grad.data[i * dim + c];
    });
}

Var mean_rows(const Var& a, std::size_t n_rows) {
    check_matrix(a, "mean_rows");
    const std::size_t cols = a->value.cols();
    if (n_rows == 0 || n_rows > a->value.rows()) {
        throw std::invalid_argument("mean_rows: bad row count");
    }
    Tensor out({1, cols});
    for (std::size_t r = 0; r < n_rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out.data[c] += a->value.data[r * cols + c];
    for (double& v : out.data) v /= static_cast<double>(n_rows);
    return make_op(std::move(out), {a}, [a, n_rows, cols](Node& self) {
        if (!a->requires_grad) return;
        Tensor& g = a->ensure_grad();
        const double inv = 1.0 / static_cast<double>(n_rows);
        for (std::size_t r = 0; r < n_rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) g.data[r * cols + c] += self.grad.data[c] * inv;
    });
}

Var power_normalize(const Var& a) {
    const std::size_t n = a->value.size();
    double ms = 0.0;
    for (double v : a->value.data) ms += v * v;
    ms /= static_cast<double>(n);
    if (ms == 0.0) throw std::invalid_argument("power_normalize: all-zero input");
    const double s = std::sqrt(ms);
    Tensor out = a->value;
    for (double& v : out.data) v /= s;
    return make_op(std::move(out), {a}, [a, s, n](Node& self) {
        if (!a->requires_grad) return;
        Tensor& g = a->ensure_grad();
        double gx_dot_x = 0.0;
        for (std::size_t i = 0; i < n; ++i) gx_dot_x += self.grad.data[i] * a->value.data[i];
        const double k = gx_dot_x / (static_cast<double>(n) * s * s * s);
        for (std::size_t i = 0; i < n; ++i)
            g.data[i] += self.grad.data[i] / s - a->value.data[i] * k;
    });
}

Var cross_entropy_rows(const Var& logits, const std::vector<int>& targets) {
    check_matrix(logits, "cross_entropy_rows");
    const std::size_t rows = logits->value.rows(), cols = logits->value.cols();
    if (targets.size() != rows) throw std::invalid_argument("cross_entropy_rows: target count");
    double loss = 0.0;
    Tensor probs = softmax_rows(logits->value);
    for (std::size_t r = 0; r < rows; ++r) {
        const int t = targets[r];
        if (t < 0 || static_cast<std::size_t>(t) >= cols) {
            throw std::invalid_argument("cross_entropy_rows: target out of range");
        }
        // log-softmax evaluated directly for stability
        const double* row = &logits->value.data[r * cols];
        double mx = row[0];
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
        double lse = 0.0;
        for (std::size_t c = 0; c < cols; ++c) lse += std::exp(row[c] - mx);
        loss += (mx + std::log(lse)) - row[static_cast<std::size_t>(t)];
    }
    loss /= static_cast<double>(rows);
    auto probs_p = std::make_shared<Tensor>(std::move(probs));
    return make_op(Tensor::scalar(loss), {logits},
                   [logits, targets, probs_p, rows, cols](Node& self) {
        if (!logits->requires_grad) return;
        Tensor& g = logits->ensure_grad();
        const double go = self.grad.data[0] / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c)
                g.data[r * cols + c] += go * probs_p->data[r * cols + c];
            g.data[r * cols + static_cast<std::size_t>(targets[r])] -= go;
        }
    });
}

Var bce_with_logits(const Var& logits, const std::vector<double>& labels) {
    const std::size_t n = logits->value.size();
    if (labels.size() != n) throw std::invalid_argument("bce_with_logits: label count");
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = logits->value.data[i];
        loss += std::max(z, 0.0) - z * labels[i] + std::log1p(std::exp(-std::abs(z)));
    }
    loss /= static_cast<double>(n);
    return make_op(Tensor::scalar(loss), {logits}, [logits, labels, n](Node& self) {
        if (!logits->requires_grad) return;
        Tensor& g = logits->ensure_grad();
        const double go = self.grad.data[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double p = 1.0 / (1.0 + std::exp(-logits->value.data[i]));
            g.data[i] += go * (p - labels[i]);
        }
    });
}

Var mse_loss(const Var& pred, const Tensor& target) {
    if (!pred->value.same_shape(target)) throw std::invalid_argument("mse_loss: shape mismatch");
    const std::size_t rows = pred->value.rank() == 2 ? pred->value.rows() : 1;
    double loss = 0.0;
    for (std::size_t i = 0; i < pred->value.size(); ++i) {
        const double d = pred->value.data[i] - target.data[i];
        loss += d * d;
    }
    loss /= static_cast<double>(rows);
    auto target_p = std::make_shared<Tensor>(target);
    return make_op(Tensor::scalar(loss), {pred}, [pred, target_p, rows](Node& self) {
        if (!pred->requires_grad) return;
        Tensor& g = pred->ensure_grad();
        const double go = 2.0 * self.grad.data[0] / static_cast<double>(rows);
        for (std::size_t i = 0; i < g.data.size(); ++i)
            g.data[i] += go * (pred->value.data[i] - target_p->data[i]);
    });
}

Var sum_all(const Var& a) {
    double s = 0.0;
    for (double v : a->value.data) s += v;
    return make_op(Tensor::scalar(s), {a}, [a](Node& self) {
        if (!a->requires_grad) return;
        Tensor& g = a->ensure_grad();
        for (double& v : g.data) v += self.grad.data[0];
    });
}

void backward(const Var& loss) {
    if (!loss) throw std::logic_error("backward: null loss");
    if (loss->value.size() != 1) throw std::logic_error("backward: loss must be scalar");
    if (loss->parents.empty() && !loss->requires_grad) {
        throw std::logic_error("backward: no computation graph recorded for the loss");
    }
    // Iterative post-order DFS for a reverse topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* parent = node->parents[idx].get();
            ++idx;
            if (parent->requires_grad && !visited.count(parent)) {
                visited.insert(parent);
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    // Zero interior-node gradients (parameters accumulate across calls).
    for (Node* n : order) {
        if (n->name.empty()) n->zero_grad();
    }
    loss->ensure_grad().data[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) n->backprop(*n);
    }
}

void zero_grad(const std::vector<Var>& params) {
    for (const auto& p : params) p->zero_grad();
}

GradCheckReport gradient_check(const std::function<Var()>& loss_builder,
                               const std::vector<Var>& params, double h,
                               std::size_t max_entries_per_param, Rng* rng) {
    zero_grad(params);
    Var loss = loss_builder();
    if (!std::isfinite(loss->value.data[0])) {
        throw std::runtime_error("gradient_check: non-finite loss");
    }
    backward(loss);

    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p->grad);

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Node& p = *params[pi];
        GradCheckEntry entry;
        entry.name = p.name.empty() ? ("param" + std::to_string(pi)) : p.name;
        std::vector<std::size_t> probe;
        const std::size_t n = p.value.size();
        if (n <= max_entries_per_param || rng == nullptr) {
            probe.resize(std::min(n, max_entries_per_param));
            for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = i;
        } else {
            for (std::size_t i = 0; i < max_entries_per_param; ++i)
                probe.push_back(rng->uniform_index(n));
        }
        for (std::size_t idx : probe) {
            const double orig = p.value.data[idx];
            p.value.data[idx] = orig + h;
            const double fp = loss_builder()->value.data[0];
            p.value.data[idx] = orig - h;
            const double fm = loss_builder()->value.data[0];
            p.value.data[idx] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm)) {
                throw std::runtime_error("gradient_check: non-finite loss during probing");
            }
            const double fd = (fp - fm) / (2.0 * h);
            const double an = analytic[pi].data[idx];
            const double denom = std::max({std::abs(an), std::abs(fd), 1e-4});
            const double rel = std::abs(an - fd) / denom;
            entry.max_rel_error = std::max(entry.max_rel_error, rel);
        }
        if (entry.max_rel_error > report.max_rel_error) {
            report.max_rel_error = entry.max_rel_error;
            report.worst_param = entry.name;
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace semharq
