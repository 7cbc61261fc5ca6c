#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "gpe/matrix.hpp"

namespace gpe::ad {

// Minimal define-by-run reverse-mode tape over Matrix. Scoped to exactly the
// ops the GPE loss graph needs; not a general autodiff framework.
struct Node {
    Matrix value;
    Matrix grad;  // allocated lazily by backward()
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;  // scatters this->grad into parents
    bool visited = false;                 // scratch for topo sort
};

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    const Matrix& value() const { return node_->value; }
    const Matrix& grad() const { return node_->grad; }
    std::size_t rows() const { return node_->value.rows; }
    std::size_t cols() const { return node_->value.cols; }
    double scalar() const { return node_->value.data[0]; }
    bool defined() const { return node_ != nullptr; }
    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

Var constant(Matrix value);
Var param(Matrix value);  // leaf with requires_grad

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var hadamard(const Var& a, const Var& b);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add_row_broadcast(const Var& a, const Var& row);  // a (n x d) + row (1 x d)
Var sub_row_broadcast(const Var& a, const Var& row);
Var slice_rows(const Var& a, std::size_t r0, std::size_t r1);
Var slice_cols(const Var& a, std::size_t c0, std::size_t c1);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var gather_rows(const Var& table, const std::vector<std::size_t>& ids);
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps);
Var gelu(const Var& x);
Var square(const Var& x);
Var sum_all(const Var& x);           // 1x1
Var mean_rows(const Var& x);         // 1 x d, mean over rows
Var normalize_rows(const Var& x);    // per-row L2 normalization
Var offdiag_square_sum(const Var& c);  // 1x1: sum of squared off-diagonals

// softmax_rows(x + mask) with exact zeros on masked entries; mask is a
// constant {0,-inf} matrix.
Var masked_softmax_rows(const Var& x, const Matrix& mask);

// Mean over rows of -log softmax(logits)[label]: the cross-entropy used by
// every training mode. logits is (n x C), labels.size() == n.
Var cross_entropy_from_logits(const Var& logits, const std::vector<std::size_t>& labels);

// Reverse pass from a 1x1 root. Seeds root grad with 1.
void backward(const Var& root);

}  // namespace gpe::ad
