#include "gpe/autodiff.hpp"

#include <cmath>
#include <limits>

namespace gpe::ad {

namespace {

std::shared_ptr<Node> make_node(Matrix value, std::vector<std::shared_ptr<Node>> parents,
                                std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents)
        if (p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) n->backprop = std::move(backprop);
    return n;
}

void ensure_grad(Node& n) {
    if (n.grad.size() == 0) n.grad = Matrix(n.value.rows, n.value.cols);
}

void accumulate(const std::shared_ptr<Node>& p, const Matrix& g) {
    if (!p->requires_grad) return;
    ensure_grad(*p);
    for (std::size_t i = 0; i < g.size(); ++i) p->grad.data[i] += g.data[i];
}

}  // namespace

Var constant(Matrix value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return Var(n);
}

Var param(Matrix value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(n);
}

Var add(const Var& a, const Var& b) {
    if (!a.value().same_shape(b.value())) throw ShapeError("ad::add: shape mismatch");
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.value().data[i];
    auto pa = a.node(), pb = b.node();
    return Var(make_node(std::move(out), {pa, pb}, [pa, pb](Node& n) {
        accumulate(pa, n.grad);
        accumulate(pb, n.grad);
    }));
}

Var sub(const Var& a, const Var& b) {
    if (!a.value().same_shape(b.value())) throw ShapeError("ad::sub: shape mismatch");
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.value().data[i];
    auto pa = a.node(), pb = b.node();
    return Var(make_node(std::move(out), {pa, pb}, [pa, pb](Node& n) {
        accumulate(pa, n.grad);
        Matrix neg = n.grad;
        for (double& v : neg.data) v = -v;
        accumulate(pb, neg);
    }));
}

Var scale(const Var& a, double c) {
    Matrix out = a.value();
    for (double& v : out.data) v *= c;
    auto pa = a.node();
    return Var(make_node(std::move(out), {pa}, [pa, c](Node& n) {
        Matrix g = n.grad;
        for (double& v : g.data) v *= c;
        accumulate(pa, g);
    }));
}

Var hadamard(const Var& a, const Var& b) {
    if (!a.value().same_shape(b.value())) throw ShapeError("ad::hadamard: shape mismatch");
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.value().data[i];
    auto pa = a.node(), pb = b.node();
    return Var(make_node(std::move(out), {pa, pb}, [pa, pb](Node& n) {
        Matrix ga = n.grad, gb = n.grad;
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            ga.data[i] *= pb->value.data[i];
            gb.data[i] *= pa->value.data[i];
        }
        accumulate(pa, ga);
        accumulate(pb, gb);
    }));
}

Var matmul(const Var& a, const Var& b) {
    if (a.cols() != b.rows()) throw ShapeError("ad::matmul: dimension mismatch");
    const Matrix& A = a.value();
    const Matrix& B = b.value();
    Matrix out(A.rows, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t k = 0; k < A.cols; ++k) {
            const double av = A(i, k);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < B.cols; ++j) out(i, j) += av * B(k, j);
        }
    auto pa = a.node(), pb = b.node();
    return Var(make_node(std::move(out), {pa, pb}, [pa, pb](Node& n) {
        const Matrix& A = pa->value;
        const Matrix& B = pb->value;
        if (pa->requires_grad) {
            Matrix ga(A.rows, A.cols);  // g B^T
            for (std::size_t i = 0; i < A.rows; ++i)
                for (std::size_t k = 0; k < A.cols; ++k) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < B.cols; ++j) s += n.grad(i, j) * B(k, j);
                    ga(i, k) = s;
                }
            accumulate(pa, ga);
        }
        if (pb->requires_grad) {
            Matrix gb(B.rows, B.cols);  // A^T g
            for (std::size_t k = 0; k < B.rows; ++k)
                for (std::size_t i = 0; i < A.rows; ++i) {
                    const double av = A(i, k);
                    if (av == 0.0) continue;
                    for (std::size_t j = 0; j < B.cols; ++j) gb(k, j) += av * n.grad(i, j);
                }
            accumulate(pb, gb);
        }
    }));
}

Var transpose(const Var& a) {
    const Matrix& A = a.value();
    Matrix out(A.cols, A.rows);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) out(j, i) = A(i, j);
    auto pa = a.node();
    return Var(make_node(std::move(out), {pa}, [pa](Node& n) {
        Matrix g(n.grad.cols, n.grad.rows);
        for (std::size_t i = 0; i < n.grad.rows; ++i)
            for (std::size_t j = 0; j < n.grad.cols; ++j) g(j, i) = n.grad(i, j);
        accumulate(pa, g);
    }));
}

Var add_row_broadcast(const Var& a, const Var& row) {
    if (row.rows() != 1 || row.cols() != a.cols())
        throw ShapeError("ad::add_row_broadcast: row must be 1 x cols");
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.rows; ++i)
        for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += row.value()(0, j);
    auto pa = a.node(), pr = row.node();
    return Var(make_node(std::move(out), {pa, pr}, [pa, pr](Node& n) {
        accumulate(pa, n.grad);
        if (pr->requires_grad) {
            Matrix g(1, n.grad.cols);
            for (std::size_t i = 0; i < n.grad.rows; ++i)
                for (std::size_t j = 0; j < n.grad.cols; ++j) g(0, j) += n.grad(i, j);
            accumulate(pr, g);
        }
    }));
}

Var sub_row_broadcast(const Var& a, const Var& row) {
    return add_row_broadcast(a, scale(row, -1.0));
}

Var slice_rows(const Var& a, std::size_t r0, std::size_t r1) {
    if (r1 < r0 || r1 > a.rows()) throw ShapeError("ad::slice_rows: bad range");
    Matrix out = a.value().slice_rows(r0, r1);
    auto pa = a.node();
    return Var(make_node(std::move(out), {pa}, [pa, r0](Node& n) {
        if (!pa->requires_grad) return;
        ensure_grad(*pa);
        for (std::size_t i = 0; i < n.grad.rows; ++i)
            for (std::size_t j = 0; j < n.grad.cols; ++j) pa->grad(r0 + i, j) += n.grad(i, j);
    }));
}

Var slice_cols(const Var& a, std::size_t c0, std::size_t c1) {
    if (c1 < c0 || c1 > a.cols()) throw ShapeError("ad::slice_cols: bad range");
    const Matrix& A = a.value();
    Matrix out(A.rows, c1 - c0);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = c0; j < c1; ++j) out(i, j - c0) = A(i, j);
    auto pa = a.node();
    return Var(make_node(std::move(out), {pa}, [pa, c0](Node& n) {
        if (!pa->requires_grad) return;
        ensure_grad(*pa);
        for (std::size_t i = 0; i < n.grad.rows; ++i)
            for (std::size_t j = 0; j < n.grad.cols; ++j) pa->grad(i, c0 + j) += n.grad(i, j);
    }));
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("ad::concat_rows: empty");
    std::size_t rows = 0;
    const std::size_t cols = parts.front().cols();
    for (const auto& p : parts) {
        if (p.cols() != cols) throw ShapeError("ad::concat_rows: column mismatch");
        rows += p.rows();
    }
    Matrix out(rows, cols);
    std::vector<std::shared_ptr<Node>> parents;
    std::vector<std::size_t> offsets;
    std::size_t r = 0;
    for (const auto& p : parts) {
        offsets.push_back(r);
        const Matrix& m = p.value();
        for (std::size_t i = 0; i < m.rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) out(r + i, j) = m(i, j);
        r += m.rows;
        parents.push_back(p.node());
    }
    return Var(make_node(std::move(out), parents, [parents, offsets](Node& n) {
        for (std::size_t k = 0; k < parents.size(); ++k) {
            const auto& p = parents[k];
            if (!p->requires_grad) continue;
            ensure_grad(*p);
            for (std::size_t i = 0; i < p->value.rows; ++i)
                for (std::size_t j = 0; j < p->value.cols; ++j)
                    p->grad(i, j) += n.grad(offsets[k] + i, j);
        }
    }));
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("ad::concat_cols: empty");
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) throw ShapeError("ad::concat_cols: row mismatch");
        cols += p.cols();
    }
    Matrix out(rows, cols);
    std::vector<std::shared_ptr<Node>> parents;
    std::vector<std::size_t> offsets;
    std::size_t c = 0;
    for (const auto& p : parts) {
        offsets.push_back(c);
        const Matrix& m = p.value();
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < m.cols; ++j) out(i, c + j) = m(i, j);
        c += m.cols;
        parents.push_back(p.node());
    }
    return Var(make_node(std::move(out), parents, [parents, offsets](Node& n) {
        for (std::size_t k = 0; k < parents.size(); ++k) {
            const auto& p = parents[k];
            if (!p->requires_grad) continue;
            ensure_grad(*p);
            for (std::size_t i = 0; i < p->value.rows; ++i)
                for (std::size_t j = 0; j < p->value.cols; ++j)
                    p->grad(i, j) += n.grad(i, offsets[k] + j);
        }
    }));
}

Var gather_rows(const Var& table, const std::vector<std::size_t>& ids) {
    const Matrix& T = table.value();
    Matrix out(ids.size(), T.cols);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= T.rows) throw DomainError("ad::gather_rows: id out of range");
        for (std::size_t j = 0; j < T.cols; ++j) out(i, j) = T(ids[i], j);
    }
    auto pt = table.node();
    return Var(make_node(std::move(out), {pt}, [pt, ids](Node& n) {
        if (!pt->requires_grad) return;
        ensure_grad(*pt);
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = 0; j < n.grad.cols; ++j) pt->grad(ids[i], j) += n.grad(i, j);
    }));
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
    const Matrix& X = x.value();
    const std::size_t d = X.cols;
    if (gain.value().size() != d || bias.value().size() != d)
        throw ShapeError("ad::layer_norm: gain/bias length mismatch");
    Matrix xhat(X.rows, d);
    auto inv = std::make_shared<std::vector<double>>(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += X(i, j);
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double dd = X(i, j) - mean;
            var += dd * dd;
        }
        var /= static_cast<double>(d);
        const double iv = 1.0 / std::sqrt(var + eps);
        (*inv)[i] = iv;
        for (std::size_t j = 0; j < d; ++j) xhat(i, j) = (X(i, j) - mean) * iv;
    }
    Matrix out(X.rows, d);
    for (std::size_t i = 0; i < X.rows; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out(i, j) = xhat(i, j) * gain.value().data[j] + bias.value().data[j];
    auto px = x.node(), pg = gain.node(), pb = bias.node();
    auto xh = std::make_shared<Matrix>(std::move(xhat));
    return Var(make_node(std::move(out), {px, pg, pb}, [px, pg, pb, xh, inv](Node& n) {
        const std::size_t rows = n.grad.rows, d = n.grad.cols;
        if (pg->requires_grad) {
            Matrix gg(1, d);
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < d; ++j) gg(0, j) += n.grad(i, j) * (*xh)(i, j);
            accumulate(pg, gg);
        }
        if (pb->requires_grad) {
            Matrix gb(1, d);
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < d; ++j) gb(0, j) += n.grad(i, j);
            accumulate(pb, gb);
        }
        if (px->requires_grad) {
            Matrix gx(rows, d);
            for (std::size_t i = 0; i < rows; ++i) {
                double sum_dh = 0.0, sum_dh_xh = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double dh = n.grad(i, j) * pg->value.data[j];
                    sum_dh += dh;
                    sum_dh_xh += dh * (*xh)(i, j);
                }
                const double m1 = sum_dh / static_cast<double>(d);
                const double m2 = sum_dh_xh / static_cast<double>(d);
                for (std::size_t j = 0; j < d; ++j) {
                    const double dh = n.grad(i, j) * pg->value.data[j];
                    gx(i, j) = (*inv)[i] * (dh - m1 - (*xh)(i, j) * m2);
                }
            }
            accumulate(px, gx);
        }
    }));
}

Var gelu(const Var& x) {
    const Matrix& X = x.value();
    Matrix out(X.rows, X.cols);
    constexpr double kInvSqrt2 = 0.7071067811865475244;
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double v = X.data[i];
        out.data[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    }
    auto px = x.node();
    return Var(make_node(std::move(out), {px}, [px](Node& n) {
        constexpr double kInvSqrt2 = 0.7071067811865475244;
        constexpr double kInvSqrt2Pi = 0.3989422804014326779;
        Matrix g = n.grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = px->value.data[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            g.data[i] *= cdf + v * pdf;
        }
        accumulate(px, g);
    }));
}

Var square(const Var& x) { return hadamard(x, x); }

Var sum_all(const Var& x) {
    Matrix out(1, 1);
    for (double v : x.value().data) out.data[0] += v;
    auto px = x.node();
    return Var(make_node(std::move(out), {px}, [px](Node& n) {
        Matrix g(px->value.rows, px->value.cols);
        for (double& v : g.data) v = n.grad.data[0];
        accumulate(px, g);
    }));
}

Var mean_rows(const Var& x) {
    const Matrix& X = x.value();
    Matrix out(1, X.cols);
    for (std::size_t i = 0; i < X.rows; ++i)
        for (std::size_t j = 0; j < X.cols; ++j) out(0, j) += X(i, j);
    const double invn = 1.0 / static_cast<double>(X.rows);
    for (double& v : out.data) v *= invn;
    auto px = x.node();
    return Var(make_node(std::move(out), {px}, [px, invn](Node& n) {
        Matrix g(px->value.rows, px->value.cols);
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j) g(i, j) = n.grad(0, j) * invn;
        accumulate(px, g);
    }));
}

Var normalize_rows(const Var& x) {
    const Matrix& X = x.value();
    Matrix out(X.rows, X.cols);
    auto norms = std::make_shared<std::vector<double>>(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < X.cols; ++j) s += X(i, j) * X(i, j);
        if (s == 0.0) throw DomainError("ad::normalize_rows: zero-norm row");
        const double r = std::sqrt(s);
        (*norms)[i] = r;
        for (std::size_t j = 0; j < X.cols; ++j) out(i, j) = X(i, j) / r;
    }
    auto px = x.node();
    auto yv = std::make_shared<Matrix>(out);
    return Var(make_node(std::move(out), {px}, [px, yv, norms](Node& n) {
        Matrix g(n.grad.rows, n.grad.cols);
        for (std::size_t i = 0; i < g.rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < g.cols; ++j) dot += n.grad(i, j) * (*yv)(i, j);
            for (std::size_t j = 0; j < g.cols; ++j)
                g(i, j) = (n.grad(i, j) - (*yv)(i, j) * dot) / (*norms)[i];
        }
        accumulate(px, g);
    }));
}

Var offdiag_square_sum(const Var& c) {
    const Matrix& C = c.value();
    if (C.rows != C.cols) throw ShapeError("ad::offdiag_square_sum: square matrix required");
    Matrix out(1, 1);
    for (std::size_t i = 0; i < C.rows; ++i)
        for (std::size_t j = 0; j < C.cols; ++j)
            if (i != j) out.data[0] += C(i, j) * C(i, j);
    auto pc = c.node();
    return Var(make_node(std::move(out), {pc}, [pc](Node& n) {
        Matrix g(pc->value.rows, pc->value.cols);
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j)
                if (i != j) g(i, j) = 2.0 * pc->value(i, j) * n.grad.data[0];
        accumulate(pc, g);
    }));
}

Var masked_softmax_rows(const Var& x, const Matrix& mask) {
    const Matrix& X = x.value();
    if (X.rows != mask.rows || X.cols != mask.cols)
        throw ShapeError("ad::masked_softmax_rows: mask shape mismatch");
    constexpr double kFloor = -std::numeric_limits<double>::max();
    Matrix out(X.rows, X.cols);
    for (std::size_t i = 0; i < X.rows; ++i) {
        double mx = kFloor;
        bool any = false;
        for (std::size_t j = 0; j < X.cols; ++j) {
            if (std::isfinite(mask(i, j))) {
                any = true;
                if (X(i, j) + mask(i, j) > mx) mx = X(i, j) + mask(i, j);
            }
        }
        if (!any) throw DomainError("ad::masked_softmax_rows: fully masked row");
        double sum = 0.0;
        for (std::size_t j = 0; j < X.cols; ++j) {
            const double e =
                std::isfinite(mask(i, j)) ? std::exp(X(i, j) + mask(i, j) - mx) : 0.0;
            out(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < X.cols; ++j) {
            out(i, j) /= sum;
            if (!std::isfinite(mask(i, j))) out(i, j) = 0.0;
        }
    }
    auto px = x.node();
    auto pv = std::make_shared<Matrix>(out);
    return Var(make_node(std::move(out), {px}, [px, pv](Node& n) {
        Matrix g(n.grad.rows, n.grad.cols);
        for (std::size_t i = 0; i < g.rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < g.cols; ++j) dot += n.grad(i, j) * (*pv)(i, j);
            for (std::size_t j = 0; j < g.cols; ++j)
                g(i, j) = (*pv)(i, j) * (n.grad(i, j) - dot);
        }
        accumulate(px, g);
    }));
}

Var cross_entropy_from_logits(const Var& logits, const std::vector<std::size_t>& labels) {
    const Matrix& L = logits.value();
    if (labels.size() != L.rows) throw ShapeError("ad::cross_entropy: label count mismatch");
    Matrix probs(L.rows, L.cols);
    double total = 0.0;
    for (std::size_t i = 0; i < L.rows; ++i) {
        if (labels[i] >= L.cols) throw DomainError("ad::cross_entropy: label out of range");
        double mx = L(i, 0);
        for (std::size_t j = 1; j < L.cols; ++j) mx = std::max(mx, L(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < L.cols; ++j) {
            probs(i, j) = std::exp(L(i, j) - mx);
            sum += probs(i, j);
        }
        for (std::size_t j = 0; j < L.cols; ++j) probs(i, j) /= sum;
        total += std::log(sum) + mx - L(i, labels[i]);
    }
    Matrix out(1, 1);
    out.data[0] = total / static_cast<double>(L.rows);
    auto pl = logits.node();
    auto pp = std::make_shared<Matrix>(std::move(probs));
    return Var(make_node(std::move(out), {pl}, [pl, pp, labels](Node& n) {
        const double s = n.grad.data[0] / static_cast<double>(pp->rows);
        Matrix g(pp->rows, pp->cols);
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j)
                g(i, j) = s * ((*pp)(i, j) - (j == labels[i] ? 1.0 : 0.0));
        accumulate(pl, g);
    }));
}

void backward(const Var& root) {
    if (root.value().size() != 1) throw ShapeError("ad::backward: root must be 1x1");
    // Postorder DFS, iterative; grads applied in reverse topological order.
    std::vector<Node*> order;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.node().get(), 0);
    root.node()->visited = true;
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (!p->visited && p->requires_grad) {
                p->visited = true;
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    for (Node* n : order) n->visited = false;
    ensure_grad(*root.node());
    root.node()->grad.data[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && n->grad.size() != 0) n->backprop(*n);
    }
}

}  // namespace gpe::ad
