#include "cvdx/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace cvdx::ag {

Tensor& Node::ensure_grad() {
    if (!grad_ready) {
        // zero_grad keeps leaf buffers zeroed, so an existing buffer is reusable
        if (grad.numel() != val.numel()) grad = Tensor(val.shape(), 0.0);
        grad_ready = true;
    }
    return grad;
}

namespace {
thread_local bool g_grad_enabled = true;

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->val = std::move(value);
    if (g_grad_enabled) {
        bool any = false;
        for (const auto& p : parents)
            if (p && p->requires_grad) any = true;
        if (any) {
            n->requires_grad = true;
            n->parents = std::move(parents);
            n->backprop = std::move(backprop);
        }
    }
    return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a->val.same_shape(b->val))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a->val.shape_str() +
                                    " vs " + b->val.shape_str());
}
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Var leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->val = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

Var constant(Tensor value) { return leaf(std::move(value), false); }
Var constant_scalar(double v) { return constant(Tensor::scalar(v)); }

void backward(const Var& root) {
    if (root->val.numel() != 1) throw std::invalid_argument("backward: root must be scalar");
    // topological order by iterative post-order DFS
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx].get();
            ++idx;
            if (p && p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root->ensure_grad();
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && n->grad_ready) n->backprop(*n);
    }
}

void zero_grad(const std::vector<Var>& params) {
    for (const auto& p : params) {
        p->grad_ready = false;
        if (p->grad.numel() > 0) p->grad.zero();
    }
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor out = a->val;
    const double* bp = b->val.data();
    double* op = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) op[i] += bp[i];
    return make_node(std::move(out), {a, b}, [a, b](Node& n) {
        const double* g = n.grad.data();
        if (a->requires_grad) {
            double* ga = a->ensure_grad().data();
            for (int64_t i = 0; i < n.grad.numel(); ++i) ga[i] += g[i];
        }
        if (b->requires_grad) {
            double* gb = b->ensure_grad().data();
            for (int64_t i = 0; i < n.grad.numel(); ++i) gb[i] += g[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a->val;
    const double* bp = b->val.data();
    double* op = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) op[i] -= bp[i];
    return make_node(std::move(out), {a, b}, [a, b](Node& n) {
        const double* g = n.grad.data();
        if (a->requires_grad) {
            double* ga = a->ensure_grad().data();
            for (int64_t i = 0; i < n.grad.numel(); ++i) ga[i] += g[i];
        }
        if (b->requires_grad) {
            double* gb = b->ensure_grad().data();
            for (int64_t i = 0; i < n.grad.numel(); ++i) gb[i] -= g[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor out = a->val;
    const double* bp = b->val.data();
    double* op = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) op[i] *= bp[i];
    return make_node(std::move(out), {a, b}, [a, b](Node& n) {
        const double* g = n.grad.data();
        if (a->requires_grad) {
            double* ga = a->ensure_grad().data();
            const double* bv = b->val.data();
            for (int64_t i = 0; i < n.grad.numel(); ++i) ga[i] += g[i] * bv[i];
        }
        if (b->requires_grad) {
            double* gb = b->ensure_grad().data();
            const double* av = a->val.data();
            for (int64_t i = 0; i < n.grad.numel(); ++i) gb[i] += g[i] * av[i];
        }
    });
}

Var scale(const Var& a, double c) {
    Tensor out = a->val;
    double* op = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) op[i] *= c;
    return make_node(std::move(out), {a}, [a, c](Node& n) {
        if (!a->requires_grad) return;
        double* ga = a->ensure_grad().data();
        const double* g = n.grad.data();
        for (int64_t i = 0; i < n.grad.numel(); ++i) ga[i] += c * g[i];
    });
}

Var add_scalar(const Var& a, double c) {
    Tensor out = a->val;
    double* op = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) op[i] += c;
    return make_node(std::move(out), {a}, [a](Node& n) {
        if (!a->requires_grad) return;
        double* ga = a->ensure_grad().data();
        const double* g = n.grad.data();
        for (int64_t i = 0; i < n.grad.numel(); ++i) ga[i] += g[i];
    });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var relu(const Var& a) {
    Tensor out = a->val;
    double* op = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) op[i] = op[i] > 0.0 ? op[i] : 0.0;
    return make_node(std::move(out), {a}, [a](Node& n) {
        if (!a->requires_grad) return;
        double* ga = a->ensure_grad().data();
        const double* g = n.grad.data();
        const double* av = a->val.data();
        for (int64_t i = 0; i < n.grad.numel(); ++i)
            if (av[i] > 0.0) ga[i] += g[i];
    });
}

Var hinge(const Var& s) { return relu(s); }

Var silu(const Var& a) {
    Tensor out = a->val;
    double* op = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) {
        double s = 1.0 / (1.0 + std::exp(-op[i]));
        op[i] = op[i] * s;
    }
    return make_node(std::move(out), {a}, [a](Node& n) {
        if (!a->requires_grad) return;
        double* ga = a->ensure_grad().data();
        const double* g = n.grad.data();
        const double* av = a->val.data();
        for (int64_t i = 0; i < n.grad.numel(); ++i) {
            double s = 1.0 / (1.0 + std::exp(-av[i]));
            ga[i] += g[i] * (s + av[i] * s * (1.0 - s));
        }
    });
}

Var sigmoid(const Var& a) {
    Tensor out = a->val;
    double* op = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) op[i] = 1.0 / (1.0 + std::exp(-op[i]));
    Tensor saved = out;
    return make_node(std::move(out), {a}, [a, saved](Node& n) {
        if (!a->requires_grad) return;
        double* ga = a->ensure_grad().data();
        const double* g = n.grad.data();
        const double* y = saved.data();
        for (int64_t i = 0; i < n.grad.numel(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    });
}

Var logv(const Var& a) {
    Tensor out = a->val;
    double* op = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) op[i] = std::log(op[i]);
    return make_node(std::move(out), {a}, [a](Node& n) {
        if (!a->requires_grad) return;
        double* ga = a->ensure_grad().data();
        const double* g = n.grad.data();
        const double* av = a->val.data();
        for (int64_t i = 0; i < n.grad.numel(); ++i) ga[i] += g[i] / av[i];
    });
}

Var sqrtv(const Var& a) {
    Tensor out = a->val;
    double* op = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) op[i] = std::sqrt(op[i]);
    Tensor saved = out;
    return make_node(std::move(out), {a}, [a, saved](Node& n) {
        if (!a->requires_grad) return;
        double* ga = a->ensure_grad().data();
        const double* g = n.grad.data();
        const double* y = saved.data();
        for (int64_t i = 0; i < n.grad.numel(); ++i) ga[i] += g[i] * 0.5 / y[i];
    });
}

Var divide(const Var& a, const Var& b) {
    check_same_shape(a, b, "divide");
    Tensor out = a->val;
    const double* bp = b->val.data();
    double* op = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) op[i] /= bp[i];
    return make_node(std::move(out), {a, b}, [a, b](Node& n) {
        const double* g = n.grad.data();
        const double* av = a->val.data();
        const double* bv = b->val.data();
        if (a->requires_grad) {
            double* ga = a->ensure_grad().data();
            for (int64_t i = 0; i < n.grad.numel(); ++i) ga[i] += g[i] / bv[i];
        }
        if (b->requires_grad) {
            double* gb = b->ensure_grad().data();
            for (int64_t i = 0; i < n.grad.numel(); ++i) gb[i] -= g[i] * av[i] / (bv[i] * bv[i]);
        }
    });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

Var sum_all(const Var& a) {
    Tensor out = Tensor::scalar(a->val.sum());
    return make_node(std::move(out), {a}, [a](Node& n) {
        if (!a->requires_grad) return;
        double g = n.grad[0];
        double* ga = a->ensure_grad().data();
        for (int64_t i = 0; i < a->val.numel(); ++i) ga[i] += g;
    });
}

Var mean_all(const Var& a) {
    const double inv = 1.0 / static_cast<double>(a->val.numel());
    Tensor out = Tensor::scalar(a->val.sum() * inv);
    return make_node(std::move(out), {a}, [a, inv](Node& n) {
        if (!a->requires_grad) return;
        double g = n.grad[0] * inv;
        double* ga = a->ensure_grad().data();
        for (int64_t i = 0; i < a->val.numel(); ++i) ga[i] += g;
    });
}

Var dot(const Var& a, const Var& b) {
    check_same_shape(a, b, "dot");
    double s = 0.0;
    const double* ap = a->val.data();
    const double* bp = b->val.data();
    for (int64_t i = 0; i < a->val.numel(); ++i) s += ap[i] * bp[i];
    return make_node(Tensor::scalar(s), {a, b}, [a, b](Node& n) {
        double g = n.grad[0];
        if (a->requires_grad) {
            double* ga = a->ensure_grad().data();
            const double* bv = b->val.data();
            for (int64_t i = 0; i < a->val.numel(); ++i) ga[i] += g * bv[i];
        }
        if (b->requires_grad) {
            double* gb = b->ensure_grad().data();
            const double* av = a->val.data();
            for (int64_t i = 0; i < b->val.numel(); ++i) gb[i] += g * av[i];
        }
    });
}

Var mse(const Var& a, const Var& b) {
    check_same_shape(a, b, "mse");
    const int64_t n = a->val.numel();
    const double inv = 1.0 / static_cast<double>(n);
    double s = 0.0;
    const double* ap = a->val.data();
    const double* bp = b->val.data();
    for (int64_t i = 0; i < n; ++i) {
        double d = ap[i] - bp[i];
        s += d * d;
    }
    return make_node(Tensor::scalar(s * inv), {a, b}, [a, b, inv](Node& nd) {
        double g = nd.grad[0] * 2.0 * inv;
        const double* av = a->val.data();
        const double* bv = b->val.data();
        if (a->requires_grad) {
            double* ga = a->ensure_grad().data();
            for (int64_t i = 0; i < a->val.numel(); ++i) ga[i] += g * (av[i] - bv[i]);
        }
        if (b->requires_grad) {
            double* gb = b->ensure_grad().data();
            for (int64_t i = 0; i < b->val.numel(); ++i) gb[i] -= g * (av[i] - bv[i]);
        }
    });
}

Var mean_rows(const Var& a) {
    if (a->val.rank() != 2) throw std::invalid_argument("mean_rows: rank-2 input required");
    const int n = a->val.dim(0), d = a->val.dim(1);
    Tensor out({d});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) out[j] += a->val.at2(i, j);
    const double inv = 1.0 / n;
    for (int j = 0; j < d; ++j) out[j] *= inv;
    return make_node(std::move(out), {a}, [a, n, d, inv](Node& nd) {
        if (!a->requires_grad) return;
        Tensor& ga = a->ensure_grad();
        const double* g = nd.grad.data();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) ga.at2(i, j) += g[j] * inv;
    });
}

// ---------------------------------------------------------------------------
// broadcast helpers
// ---------------------------------------------------------------------------

Var add_channel_bias(const Var& x, const Var& bias) {
    const int c = x->val.dim(0);
    if (bias->val.numel() != c) throw std::invalid_argument("add_channel_bias: C mismatch");
    const int64_t inner = x->val.numel() / c;
    Tensor out = x->val;
    for (int ch = 0; ch < c; ++ch) {
        double b = bias->val[ch];
        double* p = out.data() + ch * inner;
        for (int64_t i = 0; i < inner; ++i) p[i] += b;
    }
    return make_node(std::move(out), {x, bias}, [x, bias, c, inner](Node& n) {
        const double* g = n.grad.data();
        if (x->requires_grad) {
            double* gx = x->ensure_grad().data();
            for (int64_t i = 0; i < n.grad.numel(); ++i) gx[i] += g[i];
        }
        if (bias->requires_grad) {
            double* gb = bias->ensure_grad().data();
            for (int ch = 0; ch < c; ++ch) {
                double s = 0.0;
                const double* p = g + ch * inner;
                for (int64_t i = 0; i < inner; ++i) s += p[i];
                gb[ch] += s;
            }
        }
    });
}

Var add_row_bias(const Var& x, const Var& bias) {
    if (x->val.rank() != 2) throw std::invalid_argument("add_row_bias: rank-2 input required");
    const int n = x->val.dim(0), d = x->val.dim(1);
    if (bias->val.numel() != d) throw std::invalid_argument("add_row_bias: D mismatch");
    Tensor out = x->val;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) out.at2(i, j) += bias->val[j];
    return make_node(std::move(out), {x, bias}, [x, bias, n, d](Node& nd) {
        const double* g = nd.grad.data();
        if (x->requires_grad) {
            double* gx = x->ensure_grad().data();
            for (int64_t i = 0; i < nd.grad.numel(); ++i) gx[i] += g[i];
        }
        if (bias->requires_grad) {
            double* gb = bias->ensure_grad().data();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) gb[j] += g[static_cast<int64_t>(i) * d + j];
        }
    });
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
    if (a->val.rank() != 2 || b->val.rank() != 2 || a->val.dim(1) != b->val.dim(0))
        throw std::invalid_argument("matmul: incompatible shapes " + a->val.shape_str() + " x " +
                                    b->val.shape_str());
    const int m = a->val.dim(0), k = a->val.dim(1), n = b->val.dim(1);
    Tensor out({m, n});
    const double* A = a->val.data();
    const double* B = b->val.data();
    double* O = out.data();
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            double av = A[static_cast<int64_t>(i) * k + p];
            const double* brow = B + static_cast<int64_t>(p) * n;
            double* orow = O + static_cast<int64_t>(i) * n;
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    return make_node(std::move(out), {a, b}, [a, b, m, k, n](Node& nd) {
        const double* G = nd.grad.data();
        if (a->requires_grad) {
            double* GA = a->ensure_grad().data();
            const double* B = b->val.data();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    double g = G[static_cast<int64_t>(i) * n + j];
                    const double* brow = B;
                    for (int p = 0; p < k; ++p)
                        GA[static_cast<int64_t>(i) * k + p] += g * brow[static_cast<int64_t>(p) * n + j];
                }
        }
        if (b->requires_grad) {
            double* GB = b->ensure_grad().data();
            const double* A = a->val.data();
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    double av = A[static_cast<int64_t>(i) * k + p];
                    const double* grow = G + static_cast<int64_t>(i) * n;
                    double* gbrow = GB + static_cast<int64_t>(p) * n;
                    for (int j = 0; j < n; ++j) gbrow[j] += av * grow[j];
                }
        }
    });
}

Var transpose2d(const Var& a) {
    if (a->val.rank() != 2) throw std::invalid_argument("transpose2d: rank-2 input required");
    const int m = a->val.dim(0), n = a->val.dim(1);
    Tensor out({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.at2(j, i) = a->val.at2(i, j);
    return make_node(std::move(out), {a}, [a, m, n](Node& nd) {
        if (!a->requires_grad) return;
        Tensor& ga = a->ensure_grad();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) ga.at2(i, j) += nd.grad.at2(j, i);
    });
}

Var linear(const Var& x, const Var& w, const Var& b) {
    return add_row_bias(matmul(x, w), b);
}

Var softmax_rows(const Var& a) {
    if (a->val.rank() != 2) throw std::invalid_argument("softmax_rows: rank-2 input required");
    const int n = a->val.dim(0), d = a->val.dim(1);
    Tensor out = a->val;
    for (int i = 0; i < n; ++i) {
        double mx = out.at2(i, 0);
        for (int j = 1; j < d; ++j) mx = std::max(mx, out.at2(i, j));
        double s = 0.0;
        for (int j = 0; j < d; ++j) {
            double e = std::exp(out.at2(i, j) - mx);
            out.at2(i, j) = e;
            s += e;
        }
        for (int j = 0; j < d; ++j) out.at2(i, j) /= s;
    }
    Tensor saved = out;
    return make_node(std::move(out), {a}, [a, saved, n, d](Node& nd) {
        if (!a->requires_grad) return;
        Tensor& ga = a->ensure_grad();
        for (int i = 0; i < n; ++i) {
            double gy = 0.0;
            for (int j = 0; j < d; ++j) gy += nd.grad.at2(i, j) * saved.at2(i, j);
            for (int j = 0; j < d; ++j)
                ga.at2(i, j) += saved.at2(i, j) * (nd.grad.at2(i, j) - gy);
        }
    });
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

Var reshape(const Var& a, std::vector<int> shape) {
    Tensor out = a->val.reshaped(shape);
    return make_node(std::move(out), {a}, [a](Node& nd) {
        if (!a->requires_grad) return;
        double* ga = a->ensure_grad().data();
        const double* g = nd.grad.data();
        for (int64_t i = 0; i < nd.grad.numel(); ++i) ga[i] += g[i];
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: empty input");
    const int d = parts[0]->val.dim(1);
    int total = 0;
    for (const auto& p : parts) {
        if (p->val.rank() != 2 || p->val.dim(1) != d)
            throw std::invalid_argument("concat_rows: column mismatch");
        total += p->val.dim(0);
    }
    Tensor out({total, d});
    int r = 0;
    for (const auto& p : parts) {
        std::copy(p->val.data(), p->val.data() + p->val.numel(),
                  out.data() + static_cast<int64_t>(r) * d);
        r += p->val.dim(0);
    }
    return make_node(std::move(out), parts, [parts, d](Node& nd) {
        int r = 0;
        for (const auto& p : parts) {
            const int rows = p->val.dim(0);
            if (p->requires_grad) {
                double* gp = p->ensure_grad().data();
                const double* g = nd.grad.data() + static_cast<int64_t>(r) * d;
                for (int64_t i = 0; i < static_cast<int64_t>(rows) * d; ++i) gp[i] += g[i];
            }
            r += rows;
        }
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
    const int n = parts[0]->val.dim(0);
    int total = 0;
    for (const auto& p : parts) {
        if (p->val.rank() != 2 || p->val.dim(0) != n)
            throw std::invalid_argument("concat_cols: row mismatch");
        total += p->val.dim(1);
    }
    Tensor out({n, total});
    int c = 0;
    for (const auto& p : parts) {
        const int d = p->val.dim(1);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) out.at2(i, c + j) = p->val.at2(i, j);
        c += d;
    }
    return make_node(std::move(out), parts, [parts, n](Node& nd) {
        int c = 0;
        for (const auto& p : parts) {
            const int d = p->val.dim(1);
            if (p->requires_grad) {
                Tensor& gp = p->ensure_grad();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < d; ++j) gp.at2(i, j) += nd.grad.at2(i, c + j);
            }
            c += d;
        }
    });
}

Var slice_rows(const Var& a, int row0, int row1) {
    if (a->val.rank() != 2) throw std::invalid_argument("slice_rows: rank-2 input required");
    const int d = a->val.dim(1);
    Tensor out({row1 - row0, d});
    std::copy(a->val.data() + static_cast<int64_t>(row0) * d,
              a->val.data() + static_cast<int64_t>(row1) * d, out.data());
    return make_node(std::move(out), {a}, [a, row0, d](Node& nd) {
        if (!a->requires_grad) return;
        double* ga = a->ensure_grad().data() + static_cast<int64_t>(row0) * d;
        const double* g = nd.grad.data();
        for (int64_t i = 0; i < nd.grad.numel(); ++i) ga[i] += g[i];
    });
}

Var slice_cols(const Var& a, int col0, int col1) {
    if (a->val.rank() != 2) throw std::invalid_argument("slice_cols: rank-2 input required");
    const int n = a->val.dim(0);
    const int d = col1 - col0;
    Tensor out({n, d});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) out.at2(i, j) = a->val.at2(i, col0 + j);
    return make_node(std::move(out), {a}, [a, n, d, col0](Node& nd) {
        if (!a->requires_grad) return;
        Tensor& ga = a->ensure_grad();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) ga.at2(i, col0 + j) += nd.grad.at2(i, j);
    });
}

Var select_row(const Var& a, int row) {
    const int d = a->val.dim(1);
    return reshape(slice_rows(a, row, row + 1), {d});
}

Var concat_channels(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_channels: empty input");
    std::vector<int> shape = parts[0]->val.shape();
    int ctotal = 0;
    for (const auto& p : parts) {
        auto s = p->val.shape();
        for (size_t i = 1; i < s.size(); ++i)
            if (s[i] != shape[i]) throw std::invalid_argument("concat_channels: spatial mismatch");
        ctotal += s[0];
    }
    shape[0] = ctotal;
    Tensor out(shape);
    double* dst = out.data();
    for (const auto& p : parts) {
        std::copy(p->val.data(), p->val.data() + p->val.numel(), dst);
        dst += p->val.numel();
    }
    return make_node(std::move(out), parts, [parts](Node& nd) {
        const double* g = nd.grad.data();
        for (const auto& p : parts) {
            if (p->requires_grad) {
                double* gp = p->ensure_grad().data();
                for (int64_t i = 0; i < p->val.numel(); ++i) gp[i] += g[i];
            }
            g += p->val.numel();
        }
    });
}

Var gather(const Var& a, std::vector<int> idx) {
    if (a->val.rank() != 1) throw std::invalid_argument("gather: rank-1 input required");
    Tensor out({static_cast<int>(idx.size())});
    for (size_t i = 0; i < idx.size(); ++i) out[static_cast<int64_t>(i)] = a->val[idx[i]];
    return make_node(std::move(out), {a}, [a, idx](Node& nd) {
        if (!a->requires_grad) return;
        Tensor& ga = a->ensure_grad();
        for (size_t i = 0; i < idx.size(); ++i) ga[idx[i]] += nd.grad[static_cast<int64_t>(i)];
    });
}

// ---------------------------------------------------------------------------
// normalization
// ---------------------------------------------------------------------------

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
    if (x->val.rank() != 2) throw std::invalid_argument("layer_norm: rank-2 input required");
    const int n = x->val.dim(0), d = x->val.dim(1);
    Tensor out({n, d});
    Tensor xhat({n, d});
    Tensor inv_std({n});
    for (int i = 0; i < n; ++i) {
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += x->val.at2(i, j);
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            double c = x->val.at2(i, j) - mean;
            var += c * c;
        }
        var /= d;
        double istd = 1.0 / std::sqrt(var + eps);
        inv_std[i] = istd;
        for (int j = 0; j < d; ++j) {
            double h = (x->val.at2(i, j) - mean) * istd;
            xhat.at2(i, j) = h;
            out.at2(i, j) = h * gamma->val[j] + beta->val[j];
        }
    }
    return make_node(std::move(out), {x, gamma, beta},
                     [x, gamma, beta, xhat, inv_std, n, d](Node& nd) {
        if (gamma->requires_grad) {
            double* gg = gamma->ensure_grad().data();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) gg[j] += nd.grad.at2(i, j) * xhat.at2(i, j);
        }
        if (beta->requires_grad) {
            double* gb = beta->ensure_grad().data();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) gb[j] += nd.grad.at2(i, j);
        }
        if (x->requires_grad) {
            Tensor& gx = x->ensure_grad();
            for (int i = 0; i < n; ++i) {
                double sum_gh = 0.0, sum_ghx = 0.0;
                for (int j = 0; j < d; ++j) {
                    double gh = nd.grad.at2(i, j) * gamma->val[j];
                    sum_gh += gh;
                    sum_ghx += gh * xhat.at2(i, j);
                }
                for (int j = 0; j < d; ++j) {
                    double gh = nd.grad.at2(i, j) * gamma->val[j];
                    gx.at2(i, j) +=
                        inv_std[i] * (gh - sum_gh / d - xhat.at2(i, j) * sum_ghx / d);
                }
            }
        }
    });
}

Var group_norm(const Var& x, const Var& gamma, const Var& beta, int groups, double eps) {
    const int c = x->val.dim(0);
    if (c % groups != 0) throw std::invalid_argument("group_norm: C not divisible by groups");
    const int64_t inner = x->val.numel() / c;
    const int cg = c / groups;
    const int64_t gsize = cg * inner;
    Tensor out(x->val.shape());
    Tensor xhat(x->val.shape());
    Tensor inv_std({groups});
    const double* xp = x->val.data();
    for (int g = 0; g < groups; ++g) {
        const double* base = xp + static_cast<int64_t>(g) * gsize;
        double mean = 0.0;
        for (int64_t i = 0; i < gsize; ++i) mean += base[i];
        mean /= static_cast<double>(gsize);
        double var = 0.0;
        for (int64_t i = 0; i < gsize; ++i) {
            double d = base[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(gsize);
        double istd = 1.0 / std::sqrt(var + eps);
        inv_std[g] = istd;
        double* hp = xhat.data() + static_cast<int64_t>(g) * gsize;
        double* op = out.data() + static_cast<int64_t>(g) * gsize;
        for (int64_t i = 0; i < gsize; ++i) {
            double h = (base[i] - mean) * istd;
            hp[i] = h;
            int ch = g * cg + static_cast<int>(i / inner);
            op[i] = h * gamma->val[ch] + beta->val[ch];
        }
    }
    return make_node(std::move(out), {x, gamma, beta},
                     [x, gamma, beta, xhat, inv_std, groups, cg, inner, gsize](Node& nd) {
        if (gamma->requires_grad || beta->requires_grad) {
            const int c = cg * groups;
            for (int ch = 0; ch < c; ++ch) {
                double sg = 0.0, sb = 0.0;
                const double* g = nd.grad.data() + static_cast<int64_t>(ch) * inner;
                const double* h = xhat.data() + static_cast<int64_t>(ch) * inner;
                for (int64_t i = 0; i < inner; ++i) {
                    sg += g[i] * h[i];
                    sb += g[i];
                }
                if (gamma->requires_grad) gamma->ensure_grad()[ch] += sg;
                if (beta->requires_grad) beta->ensure_grad()[ch] += sb;
            }
        }
        if (x->requires_grad) {
            Tensor& gx = x->ensure_grad();
            for (int g = 0; g < groups; ++g) {
                double sum_gh = 0.0, sum_ghx = 0.0;
                const double* gp = nd.grad.data() + static_cast<int64_t>(g) * gsize;
                const double* hp = xhat.data() + static_cast<int64_t>(g) * gsize;
                for (int64_t i = 0; i < gsize; ++i) {
                    int ch = g * cg + static_cast<int>(i / inner);
                    double gh = gp[i] * gamma->val[ch];
                    sum_gh += gh;
                    sum_ghx += gh * hp[i];
                }
                double* gxp = gx.data() + static_cast<int64_t>(g) * gsize;
                const double N = static_cast<double>(gsize);
                for (int64_t i = 0; i < gsize; ++i) {
                    int ch = g * cg + static_cast<int>(i / inner);
                    double gh = gp[i] * gamma->val[ch];
                    gxp[i] += inv_std[g] * (gh - sum_gh / N - hp[i] * sum_ghx / N);
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// convolution / pooling
// ---------------------------------------------------------------------------

namespace {
// zero-padded copy of [C,H,W]
Tensor pad2d(const Tensor& x, int pad) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({c, h + 2 * pad, w + 2 * pad});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            std::copy(x.ptr3(ch, y, 0), x.ptr3(ch, y, 0) + w, out.ptr3(ch, y + pad, pad));
    return out;
}

Tensor pad3d(const Tensor& x, int pt, int ph, int pw) {
    const int c = x.dim(0), t = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor out({c, t + 2 * pt, h + 2 * ph, w + 2 * pw});
    for (int ch = 0; ch < c; ++ch)
        for (int tt = 0; tt < t; ++tt)
            for (int y = 0; y < h; ++y)
                std::copy(x.ptr4(ch, tt, y, 0), x.ptr4(ch, tt, y, 0) + w,
                          out.ptr4(ch, tt + pt, y + ph, pw));
    return out;
}
}  // namespace

// inner kernels in scalar-times-row form so the ox loop vectorizes
namespace {
inline void axpy_row(double wv, const double* __restrict xrow, double* __restrict orow, int n,
                     int xstride) {
    if (xstride == 1) {
        for (int i = 0; i < n; ++i) orow[i] += wv * xrow[i];
    } else {
        for (int i = 0; i < n; ++i) orow[i] += wv * xrow[static_cast<int64_t>(i) * xstride];
    }
}
inline double dot_row(const double* __restrict g, const double* __restrict xrow, int n,
                      int xstride) {
    double s = 0.0;
    if (xstride == 1) {
        for (int i = 0; i < n; ++i) s += g[i] * xrow[i];
    } else {
        for (int i = 0; i < n; ++i) s += g[i] * xrow[static_cast<int64_t>(i) * xstride];
    }
    return s;
}
// scatter with stride: gx[i*stride] += wv * g[i]
inline void scatter_row(double wv, const double* __restrict g, double* __restrict xrow, int n,
                        int xstride) {
    if (xstride == 1) {
        for (int i = 0; i < n; ++i) xrow[i] += wv * g[i];
    } else {
        for (int i = 0; i < n; ++i) xrow[static_cast<int64_t>(i) * xstride] += wv * g[i];
    }
}
}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    const int ci = x->val.dim(0), h = x->val.dim(1), wd = x->val.dim(2);
    const int co = w->val.dim(0), kh = w->val.dim(2), kw = w->val.dim(3);
    if (w->val.dim(1) != ci) throw std::invalid_argument("conv2d: channel mismatch");
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (wd + 2 * pad - kw) / stride + 1;
    Tensor xpad = pad2d(x->val, pad);
    Tensor out({co, oh, ow});
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < co; ++oc) {
        double* oplane = out.data() + static_cast<int64_t>(oc) * oh * ow;
        const double bv = b->val[oc];
        for (int i = 0; i < oh * ow; ++i) oplane[i] = bv;
        for (int ic = 0; ic < ci; ++ic)
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx) {
                    double wv = w->val[(((static_cast<int64_t>(oc) * ci + ic) * kh + ky) * kw) + kx];
                    for (int oy = 0; oy < oh; ++oy)
                        axpy_row(wv, xpad.ptr3(ic, oy * stride + ky, kx), oplane + oy * ow, ow,
                                 stride);
                }
    }
    return make_node(std::move(out), {x, w, b},
                     [x, w, b, xpad, ci, co, kh, kw, oh, ow, stride, pad](Node& nd) {
        if (b->requires_grad) {
            double* gb = b->ensure_grad().data();
            for (int oc = 0; oc < co; ++oc) {
                double s = 0.0;
                const double* g = &nd.grad.at3(oc, 0, 0);
                for (int i = 0; i < oh * ow; ++i) s += g[i];
                gb[oc] += s;
            }
        }
        if (w->requires_grad) {
            Tensor& gw = w->ensure_grad();
#pragma omp parallel for schedule(static)
            for (int oc = 0; oc < co; ++oc)
                for (int ic = 0; ic < ci; ++ic)
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx) {
                            double s = 0.0;
                            for (int oy = 0; oy < oh; ++oy)
                                s += dot_row(&nd.grad.at3(oc, oy, 0),
                                             xpad.ptr3(ic, oy * stride + ky, kx), ow, stride);
                            gw[(((static_cast<int64_t>(oc) * ci + ic) * kh + ky) * kw) + kx] += s;
                        }
        }
        if (x->requires_grad) {
            Tensor gxp(xpad.shape());
#pragma omp parallel for schedule(static)
            for (int ic = 0; ic < ci; ++ic)
                for (int oc = 0; oc < co; ++oc)
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx) {
                            double wv =
                                w->val[(((static_cast<int64_t>(oc) * ci + ic) * kh + ky) * kw) + kx];
                            for (int oy = 0; oy < oh; ++oy)
                                scatter_row(wv, &nd.grad.at3(oc, oy, 0),
                                            gxp.ptr3(ic, oy * stride + ky, kx), ow, stride);
                        }
            Tensor& gx = x->ensure_grad();
            const int hh = gx.dim(1), ww2 = gx.dim(2);
            for (int ic = 0; ic < ci; ++ic)
                for (int y = 0; y < hh; ++y) {
                    const double* src = gxp.ptr3(ic, y + pad, pad);
                    double* dst = &gx.at3(ic, y, 0);
                    for (int xx = 0; xx < ww2; ++xx) dst[xx] += src[xx];
                }
        }
    });
}

Var conv3d(const Var& x, const Var& w, const Var& b, int st, int sh, int sw, int pt, int ph,
           int pw) {
    const int ci = x->val.dim(0), t = x->val.dim(1), h = x->val.dim(2), wd = x->val.dim(3);
    const int co = w->val.dim(0), kt = w->val.dim(2), kh = w->val.dim(3), kw = w->val.dim(4);
    if (w->val.dim(1) != ci) throw std::invalid_argument("conv3d: channel mismatch");
    const int ot = (t + 2 * pt - kt) / st + 1;
    const int oh = (h + 2 * ph - kh) / sh + 1;
    const int ow = (wd + 2 * pw - kw) / sw + 1;
    Tensor xpad = pad3d(x->val, pt, ph, pw);
    Tensor out({co, ot, oh, ow});
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < co; ++oc) {
        double* ovol = out.data() + static_cast<int64_t>(oc) * ot * oh * ow;
        const double bv = b->val[oc];
        for (int i = 0; i < ot * oh * ow; ++i) ovol[i] = bv;
        for (int ic = 0; ic < ci; ++ic)
            for (int kz = 0; kz < kt; ++kz)
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx) {
                        double wv = w->val[((((static_cast<int64_t>(oc) * ci + ic) * kt + kz) * kh +
                                             ky) *
                                            kw) +
                                           kx];
                        for (int oz = 0; oz < ot; ++oz)
                            for (int oy = 0; oy < oh; ++oy)
                                axpy_row(wv, xpad.ptr4(ic, oz * st + kz, oy * sh + ky, kx),
                                         ovol + (static_cast<int64_t>(oz) * oh + oy) * ow, ow, sw);
                    }
    }
    return make_node(
        std::move(out), {x, w, b},
        [x, w, b, xpad, ci, co, kt, kh, kw, ot, oh, ow, st, sh, sw, pt, ph, pw](Node& nd) {
            if (b->requires_grad) {
                double* gb = b->ensure_grad().data();
                for (int oc = 0; oc < co; ++oc) {
                    double s = 0.0;
                    const double* g = &nd.grad.at4(oc, 0, 0, 0);
                    for (int i = 0; i < ot * oh * ow; ++i) s += g[i];
                    gb[oc] += s;
                }
            }
            if (w->requires_grad) {
                Tensor& gw = w->ensure_grad();
#pragma omp parallel for schedule(static)
                for (int oc = 0; oc < co; ++oc)
                    for (int ic = 0; ic < ci; ++ic)
                        for (int kz = 0; kz < kt; ++kz)
                            for (int ky = 0; ky < kh; ++ky)
                                for (int kx = 0; kx < kw; ++kx) {
                                    double s = 0.0;
                                    for (int oz = 0; oz < ot; ++oz)
                                        for (int oy = 0; oy < oh; ++oy)
                                            s += dot_row(
                                                &nd.grad.at4(oc, oz, oy, 0),
                                                xpad.ptr4(ic, oz * st + kz, oy * sh + ky, kx), ow,
                                                sw);
                                    gw[((((static_cast<int64_t>(oc) * ci + ic) * kt + kz) * kh +
                                         ky) *
                                        kw) +
                                       kx] += s;
                                }
            }
            if (x->requires_grad) {
                Tensor gxp(xpad.shape());
#pragma omp parallel for schedule(static)
                for (int ic = 0; ic < ci; ++ic)
                    for (int oc = 0; oc < co; ++oc)
                        for (int kz = 0; kz < kt; ++kz)
                            for (int ky = 0; ky < kh; ++ky)
                                for (int kx = 0; kx < kw; ++kx) {
                                    double wv =
                                        w->val[((((static_cast<int64_t>(oc) * ci + ic) * kt + kz) *
                                                     kh +
                                                 ky) *
                                                kw) +
                                               kx];
                                    for (int oz = 0; oz < ot; ++oz)
                                        for (int oy = 0; oy < oh; ++oy)
                                            scatter_row(
                                                wv, &nd.grad.at4(oc, oz, oy, 0),
                                                gxp.ptr4(ic, oz * st + kz, oy * sh + ky, kx), ow,
                                                sw);
                                }
                Tensor& gx = x->ensure_grad();
                const int tt = gx.dim(1), hh = gx.dim(2), ww2 = gx.dim(3);
                for (int ic = 0; ic < ci; ++ic)
                    for (int z = 0; z < tt; ++z)
                        for (int y = 0; y < hh; ++y) {
                            const double* src = gxp.ptr4(ic, z + pt, y + ph, pw);
                            double* dst = &gx.at4(ic, z, y, 0);
                            for (int xx = 0; xx < ww2; ++xx) dst[xx] += src[xx];
                        }
            }
        });
}

Var avg_pool2d(const Var& x, int k) {
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    const int oh = h / k, ow = w / k;
    const double inv = 1.0 / (k * k);
    Tensor out({c, oh, ow});
    for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double s = 0.0;
                for (int dy = 0; dy < k; ++dy)
                    for (int dx = 0; dx < k; ++dx) s += x->val.at3(ch, oy * k + dy, ox * k + dx);
                out.at3(ch, oy, ox) = s * inv;
            }
    return make_node(std::move(out), {x}, [x, c, oh, ow, k, inv](Node& nd) {
        if (!x->requires_grad) return;
        Tensor& gx = x->ensure_grad();
        for (int ch = 0; ch < c; ++ch)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double g = nd.grad.at3(ch, oy, ox) * inv;
                    for (int dy = 0; dy < k; ++dy)
                        for (int dx = 0; dx < k; ++dx)
                            gx.at3(ch, oy * k + dy, ox * k + dx) += g;
                }
    });
}

Var avg_pool3d_spatial(const Var& x, int k) {
    const int c = x->val.dim(0), t = x->val.dim(1), h = x->val.dim(2), w = x->val.dim(3);
    const int oh = h / k, ow = w / k;
    const double inv = 1.0 / (k * k);
    Tensor out({c, t, oh, ow});
    for (int ch = 0; ch < c; ++ch)
        for (int z = 0; z < t; ++z)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double s = 0.0;
                    for (int dy = 0; dy < k; ++dy)
                        for (int dx = 0; dx < k; ++dx)
                            s += x->val.at4(ch, z, oy * k + dy, ox * k + dx);
                    out.at4(ch, z, oy, ox) = s * inv;
                }
    return make_node(std::move(out), {x}, [x, c, t, oh, ow, k, inv](Node& nd) {
        if (!x->requires_grad) return;
        Tensor& gx = x->ensure_grad();
        for (int ch = 0; ch < c; ++ch)
            for (int z = 0; z < t; ++z)
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        double g = nd.grad.at4(ch, z, oy, ox) * inv;
                        for (int dy = 0; dy < k; ++dy)
                            for (int dx = 0; dx < k; ++dx)
                                gx.at4(ch, z, oy * k + dy, ox * k + dx) += g;
                    }
    });
}

Var upsample_nearest2d(const Var& x, int factor) {
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    Tensor out({c, h * factor, w * factor});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h * factor; ++y)
            for (int xx = 0; xx < w * factor; ++xx)
                out.at3(ch, y, xx) = x->val.at3(ch, y / factor, xx / factor);
    return make_node(std::move(out), {x}, [x, c, h, w, factor](Node& nd) {
        if (!x->requires_grad) return;
        Tensor& gx = x->ensure_grad();
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h * factor; ++y)
                for (int xx = 0; xx < w * factor; ++xx)
                    gx.at3(ch, y / factor, xx / factor) += nd.grad.at3(ch, y, xx);
    });
}

Var spatial_mean_to_rows(const Var& x) {
    const int c = x->val.dim(0), t = x->val.dim(1), h = x->val.dim(2), w = x->val.dim(3);
    const double inv = 1.0 / (h * w);
    Tensor out({t, c});
    for (int ch = 0; ch < c; ++ch)
        for (int z = 0; z < t; ++z) {
            double s = 0.0;
            const double* p = &x->val.at4(ch, z, 0, 0);
            for (int i = 0; i < h * w; ++i) s += p[i];
            out.at2(z, ch) = s * inv;
        }
    return make_node(std::move(out), {x}, [x, c, t, h, w, inv](Node& nd) {
        if (!x->requires_grad) return;
        Tensor& gx = x->ensure_grad();
        for (int ch = 0; ch < c; ++ch)
            for (int z = 0; z < t; ++z) {
                double g = nd.grad.at2(z, ch) * inv;
                double* p = &gx.at4(ch, z, 0, 0);
                for (int i = 0; i < h * w; ++i) p[i] += g;
            }
    });
}

Var flatten_to_rows(const Var& x) {
    const int c = x->val.dim(0), t = x->val.dim(1), h = x->val.dim(2), w = x->val.dim(3);
    const int hw = h * w;
    Tensor out({t, c * hw});
    for (int z = 0; z < t; ++z)
        for (int ch = 0; ch < c; ++ch) {
            const double* src = &x->val.at4(ch, z, 0, 0);
            double* dst = &out.at2(z, ch * hw);
            for (int i = 0; i < hw; ++i) dst[i] = src[i];
        }
    return make_node(std::move(out), {x}, [x, c, t, hw](Node& nd) {
        if (!x->requires_grad) return;
        Tensor& gx = x->ensure_grad();
        for (int z = 0; z < t; ++z)
            for (int ch = 0; ch < c; ++ch) {
                const double* g = &nd.grad.at2(z, ch * hw);
                double* dst = &gx.at4(ch, z, 0, 0);
                for (int i = 0; i < hw; ++i) dst[i] += g[i];
            }
    });
}

Var bce(const Var& probs, const Tensor& targets, double eps) {
    if (!probs->val.same_shape(targets))
        throw std::invalid_argument("bce: probs/targets shape mismatch");
    const int64_t n = probs->val.numel();
    Tensor clamped = probs->val;
    double loss = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        double p = std::min(std::max(clamped[i], eps), 1.0 - eps);
        clamped[i] = p;
        double y = targets[i];
        loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    loss /= static_cast<double>(n);
    return make_node(Tensor::scalar(loss), {probs}, [probs, targets, clamped, n](Node& nd) {
        if (!probs->requires_grad) return;
        double g = nd.grad[0] / static_cast<double>(n);
        double* gp = probs->ensure_grad().data();
        const double* pv = probs->val.data();
        for (int64_t i = 0; i < n; ++i) {
            double p = clamped[i];
            // no gradient through the clamp boundary
            if (pv[i] != p) continue;
            gp[i] += g * (-(targets[i] / p) + (1.0 - targets[i]) / (1.0 - p));
        }
    });
}

}  // namespace cvdx::ag
