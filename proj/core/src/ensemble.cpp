#include "gpe/ensemble.hpp"

#include <cmath>

#include "gpe/numeric.hpp"

namespace gpe {

namespace {

std::size_t k_from(const Matrix& v) {
    if (v.rows < 3 || (v.rows - 1) % 2 != 0)
        throw ShapeError("ensemble: expected (2K+1) rows, got " + std::to_string(v.rows));
    return (v.rows - 1) / 2;
}

std::vector<double> softmax_vec(const std::vector<double>& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

}  // namespace

double group_similarity(const Matrix& v, const Matrix& t, int group) {
    const std::size_t k = k_from(v);
    if (group != 1 && group != 2) throw DomainError("group_similarity: group must be 1 or 2");
    const std::size_t begin = group == 1 ? 1 : 1 + k;
    double sum = 0.0;
    for (std::size_t i = begin; i < begin + k; ++i)
        for (std::size_t j = begin; j < begin + k; ++j)
            sum += cosine_similarity(v.row(i), t.row(j));
    return sum / static_cast<double>(k * k);
}

std::vector<double> group_prediction(const Matrix& v, const std::vector<Matrix>& t_classes,
                                     int group, double tau) {
    if (t_classes.size() < 2) throw DomainError("group_prediction: need >= 2 classes");
    std::vector<double> logits;
    logits.reserve(t_classes.size());
    for (const Matrix& t : t_classes) logits.push_back(group_similarity(v, t, group) / tau);
    return softmax_vec(logits);
}

std::vector<double> full_ensemble_predict(const Matrix& v, const std::vector<Matrix>& t_classes,
                                          const EnsembleConfig& cfg, double tau) {
    if (t_classes.size() < 2) throw DomainError("full_ensemble_predict: need >= 2 classes");
    const std::size_t k = k_from(v);
    const std::size_t begin = cfg.use_special_tokens ? 0 : 1;
    const std::size_t end = 2 * k + 1;
    const std::size_t n_classes = t_classes.size();
    std::vector<double> acc(n_classes, 0.0);
    std::size_t pairs = 0;
    std::vector<double> logits(n_classes);
    for (std::size_t i = begin; i < end; ++i)
        for (std::size_t j = begin; j < end; ++j) {
            for (std::size_t c = 0; c < n_classes; ++c)
                logits[c] = cosine_similarity(v.row(i), t_classes[c].row(j)) / tau;
            const std::vector<double> p = softmax_vec(logits);
            for (std::size_t c = 0; c < n_classes; ++c) acc[c] += p[c];
            ++pairs;
        }
    for (double& a : acc) a /= static_cast<double>(pairs);
    return acc;
}

std::vector<double> pairwise_similarity(const Matrix& v, const Matrix& t) {
    const std::size_t k = k_from(v);
    std::vector<double> out;
    out.reserve(2 * k);
    for (std::size_t i = 1; i <= 2 * k; ++i)
        out.push_back(cosine_similarity(v.row(i), t.row(i)));
    return out;
}

double pooled_similarity(const Matrix& v, const Matrix& t) {
    const std::size_t k = k_from(v);
    double sum = 0.0;
    for (std::size_t i = 1; i <= 2 * k; ++i)
        for (std::size_t j = 1; j <= 2 * k; ++j)
            sum += cosine_similarity(v.row(i), t.row(j));
    return sum / static_cast<double>(4 * k * k);
}

}  // namespace gpe
