#include "gpe/encoder.hpp"

#include <cmath>
#include <cstring>

#include "gpe/numeric.hpp"

namespace gpe {

namespace {

Matrix add_bias(Matrix x, const Matrix& b) {
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) x(i, j) += b(0, j);
    return x;
}

Matrix gelu_plain(Matrix x) {
    constexpr double kInvSqrt2 = 0.7071067811865475244;
    for (double& v : x.data) v = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    return x;
}

Matrix slice_cols_plain(const Matrix& x, std::size_t c0, std::size_t c1) {
    Matrix out(x.rows, c1 - c0);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = c0; j < c1; ++j) out(i, j - c0) = x(i, j);
    return out;
}

Matrix mhsa_plain(const Matrix& x, const LayerWeights& lw, const Matrix& mask,
                  std::size_t heads) {
    const std::size_t hd = x.cols / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
    Matrix q = add_bias(matmul(x, lw.wq), lw.bq);
    Matrix k = add_bias(matmul(x, lw.wk), lw.bk);
    Matrix v = add_bias(matmul(x, lw.wv), lw.bv);
    Matrix cat(x.rows, x.cols);
    for (std::size_t h = 0; h < heads; ++h) {
        Matrix oh = masked_attention(slice_cols_plain(q, h * hd, (h + 1) * hd),
                                     slice_cols_plain(k, h * hd, (h + 1) * hd),
                                     slice_cols_plain(v, h * hd, (h + 1) * hd), mask, scale);
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t j = 0; j < hd; ++j) cat(i, h * hd + j) = oh(i, j);
    }
    return add_bias(matmul(cat, lw.wo), lw.bo);
}

Matrix transformer_plain(Matrix x, const std::vector<LayerWeights>& layers, const Matrix& mask,
                         std::size_t heads, double eps) {
    for (const auto& lw : layers) {
        Matrix attn = mhsa_plain(layer_norm(x, lw.ln1_g, lw.ln1_b, eps), lw, mask, heads);
        for (std::size_t i = 0; i < x.size(); ++i) x.data[i] += attn.data[i];
        Matrix h = layer_norm(x, lw.ln2_g, lw.ln2_b, eps);
        Matrix m = add_bias(matmul(gelu_plain(add_bias(matmul(h, lw.w1), lw.b1)), lw.w2), lw.b2);
        for (std::size_t i = 0; i < x.size(); ++i) x.data[i] += m.data[i];
    }
    return x;
}

// Sequence assembly shared by plain and ad paths: returns band matrices in
// order. Text order depends on the variant.
struct Bands {
    std::vector<Matrix> parts;
    SequenceLayout layout;
};

LayerWeights init_layer(std::size_t dm, std::size_t mlp_ratio, RngState& rng) {
    LayerWeights lw;
    const double s_attn = 1.0 / std::sqrt(static_cast<double>(dm));
    lw.wq = random_normal(rng, dm, dm, s_attn);
    lw.bq = Matrix(1, dm);
    lw.wk = random_normal(rng, dm, dm, s_attn);
    lw.bk = Matrix(1, dm);
    lw.wv = random_normal(rng, dm, dm, s_attn);
    lw.bv = Matrix(1, dm);
    lw.wo = random_normal(rng, dm, dm, s_attn);
    lw.bo = Matrix(1, dm);
    const std::size_t dh = dm * mlp_ratio;
    lw.w1 = random_normal(rng, dm, dh, s_attn);
    lw.b1 = Matrix(1, dh);
    lw.w2 = random_normal(rng, dh, dm, 1.0 / std::sqrt(static_cast<double>(dh)));
    lw.b2 = Matrix(1, dm);
    lw.ln1_g = Matrix(1, dm);
    lw.ln1_b = Matrix(1, dm);
    lw.ln2_g = Matrix(1, dm);
    lw.ln2_b = Matrix(1, dm);
    for (double& v : lw.ln1_g.data) v = 1.0;
    for (double& v : lw.ln2_g.data) v = 1.0;
    return lw;
}

}  // namespace

void EncoderConfig::validate() const {
    if (d_v % heads || d_t % heads) throw DomainError("EncoderConfig: widths must divide heads");
    if (layers < 1 || heads < 1 || vocab < 2) throw DomainError("EncoderConfig: bad sizes");
}

EncoderWeights init_encoder_weights(const EncoderConfig& cfg, RngState& rng) {
    cfg.validate();
    EncoderWeights w;
    w.cfg = cfg;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        w.vision.layers.push_back(init_layer(cfg.d_v, cfg.mlp_ratio, rng));
        w.text.layers.push_back(init_layer(cfg.d_t, cfg.mlp_ratio, rng));
    }
    // Near-identity input projection keeps the synthetic feature geometry.
    w.vis_in_w = random_normal(rng, cfg.d_v, cfg.d_v, 0.02);
    for (std::size_t i = 0; i < cfg.d_v; ++i) w.vis_in_w(i, i) += 1.0;
    w.vis_in_b = Matrix(1, cfg.d_v);
    w.tok_embed = random_normal(rng, cfg.vocab, cfg.d_t, 0.5);
    w.pos_embed = random_normal(rng, 1 + cfg.n_y, cfg.d_t, 0.1);
    w.vis_special = random_normal(rng, 1, cfg.d_v, 0.5);
    w.txt_special = random_normal(rng, 1, cfg.d_t, 0.5);
    w.proj_v = random_normal(rng, cfg.d_v, cfg.d_joint, 1.0 / std::sqrt(double(cfg.d_v)));
    w.proj_t = random_normal(rng, cfg.d_t, cfg.d_joint, 1.0 / std::sqrt(double(cfg.d_t)));
    w.tau = 0.01;
    return w;
}

std::uint64_t weights_hash(const EncoderWeights& w) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const Matrix& m) {
        for (double v : m.data) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xFF;
                h *= 1099511628211ULL;
            }
        }
    };
    for (const auto* tower : {&w.vision, &w.text})
        for (const auto& lw : tower->layers)
            for (const Matrix* m : {&lw.wq, &lw.bq, &lw.wk, &lw.bk, &lw.wv, &lw.bv, &lw.wo,
                                    &lw.bo, &lw.w1, &lw.b1, &lw.w2, &lw.b2, &lw.ln1_g, &lw.ln1_b,
                                    &lw.ln2_g, &lw.ln2_b})
                mix(*m);
    for (const Matrix* m : {&w.vis_in_w, &w.vis_in_b, &w.tok_embed, &w.pos_embed, &w.vis_special,
                            &w.txt_special, &w.proj_v, &w.proj_t})
        mix(*m);
    return h;
}

Matrix encode_image(const Matrix& features, const PromptSet* prompts, const EncoderWeights& w,
                    const Matrix& mask) {
    if (features.cols != w.cfg.d_v) throw ShapeError("encode_image: feature width mismatch");
    Matrix proj = add_bias(matmul(features, w.vis_in_w), w.vis_in_b);
    const std::size_t k = prompts ? prompts->k_main() : 0;
    const std::size_t ka = prompts ? prompts->k_aux() : 0;
    Matrix x(1 + features.rows + 2 * k + ka, w.cfg.d_v);
    std::size_t r = 0;
    auto put = [&](const Matrix& m) {
        for (std::size_t i = 0; i < m.rows; ++i, ++r)
            for (std::size_t j = 0; j < m.cols; ++j) x(r, j) = m(i, j);
    };
    put(w.vis_special);
    put(proj);
    if (prompts) {
        put(prompts->group1);
        put(prompts->group2);
        put(prompts->auxiliary);
    }
    if (mask.rows != x.rows) throw ShapeError("encode_image: mask dimension mismatch");
    return transformer_plain(std::move(x), w.vision.layers, mask, w.cfg.heads, w.cfg.eps);
}

Matrix encode_text(const std::vector<std::size_t>& token_ids, const PromptSet* prompts,
                   const EncoderWeights& w, const Matrix& mask) {
    for (std::size_t id : token_ids)
        if (id >= w.cfg.vocab) throw DomainError("encode_text: token id out of range");
    const std::size_t n = token_ids.size();
    const std::size_t k = prompts ? prompts->k_main() : 0;
    const std::size_t ka = prompts ? prompts->k_aux() : 0;
    Matrix x(1 + n + 2 * k + ka, w.cfg.d_t);
    const bool eos_last = w.cfg.text_variant == LayoutVariant::eos_last;
    // Positional embeddings attach to input-band positions; prompts get none.
    auto put_row = [&](std::size_t r, const double* src, std::size_t pos) {
        for (std::size_t j = 0; j < w.cfg.d_t; ++j)
            x(r, j) = src[j] + w.pos_embed(pos, j);
    };
    if (eos_last) {
        for (std::size_t i = 0; i < n; ++i) put_row(i, w.tok_embed.row_ptr(token_ids[i]), i);
        put_row(n, w.txt_special.row_ptr(0), n);
    } else {
        put_row(0, w.txt_special.row_ptr(0), 0);
        for (std::size_t i = 0; i < n; ++i) put_row(1 + i, w.tok_embed.row_ptr(token_ids[i]), 1 + i);
    }
    if (prompts) {
        std::size_t r = 1 + n;
        auto put = [&](const Matrix& m) {
            for (std::size_t i = 0; i < m.rows; ++i, ++r)
                for (std::size_t j = 0; j < m.cols; ++j) x(r, j) = m(i, j);
        };
        put(prompts->group1);
        put(prompts->group2);
        put(prompts->auxiliary);
    }
    if (mask.rows != x.rows) throw ShapeError("encode_text: mask dimension mismatch");
    return transformer_plain(std::move(x), w.text.layers, mask, w.cfg.heads, w.cfg.eps);
}

namespace {

Matrix project_rows(const Matrix& last, const Matrix& proj, std::size_t special_pos,
                    const SequenceLayout& layout) {
    Matrix sel(1 + 2 * layout.k_main, last.cols);
    for (std::size_t j = 0; j < last.cols; ++j) sel(0, j) = last(special_pos, j);
    for (std::size_t i = 0; i < 2 * layout.k_main; ++i)
        for (std::size_t j = 0; j < last.cols; ++j)
            sel(1 + i, j) = last(layout.group1_begin() + i, j);
    return matmul(sel, proj);
}

}  // namespace

Matrix project_vision(const Matrix& x_last, const EncoderWeights& w,
                      const SequenceLayout& layout) {
    return project_rows(x_last, w.proj_v, 0, layout);
}

Matrix project_text(const Matrix& y_last, const EncoderWeights& w, const SequenceLayout& layout) {
    const std::size_t special_pos =
        w.cfg.text_variant == LayoutVariant::eos_last ? layout.n_features : 0;
    return project_rows(y_last, w.proj_t, special_pos, layout);
}

// ---------------- autodiff path ----------------

namespace {

ad::Var wrap(const Matrix& m, bool trainable, std::vector<ad::Var>& all) {
    ad::Var v = trainable ? ad::param(m) : ad::constant(m);
    all.push_back(v);
    return v;
}

std::vector<LayerVars> wrap_tower(const TowerWeights& t, bool trainable,
                                  std::vector<ad::Var>& all) {
    std::vector<LayerVars> out;
    for (const auto& lw : t.layers) {
        LayerVars lv;
        lv.wq = wrap(lw.wq, trainable, all);
        lv.bq = wrap(lw.bq, trainable, all);
        lv.wk = wrap(lw.wk, trainable, all);
        lv.bk = wrap(lw.bk, trainable, all);
        lv.wv = wrap(lw.wv, trainable, all);
        lv.bv = wrap(lw.bv, trainable, all);
        lv.wo = wrap(lw.wo, trainable, all);
        lv.bo = wrap(lw.bo, trainable, all);
        lv.w1 = wrap(lw.w1, trainable, all);
        lv.b1 = wrap(lw.b1, trainable, all);
        lv.w2 = wrap(lw.w2, trainable, all);
        lv.b2 = wrap(lw.b2, trainable, all);
        lv.ln1_g = wrap(lw.ln1_g, trainable, all);
        lv.ln1_b = wrap(lw.ln1_b, trainable, all);
        lv.ln2_g = wrap(lw.ln2_g, trainable, all);
        lv.ln2_b = wrap(lw.ln2_b, trainable, all);
        out.push_back(lv);
    }
    return out;
}

ad::Var mhsa_ad(const ad::Var& x, const LayerVars& lv, const Matrix& mask, std::size_t heads) {
    const std::size_t dm = x.cols();
    const std::size_t hd = dm / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
    ad::Var q = ad::add_row_broadcast(ad::matmul(x, lv.wq), lv.bq);
    ad::Var k = ad::add_row_broadcast(ad::matmul(x, lv.wk), lv.bk);
    ad::Var v = ad::add_row_broadcast(ad::matmul(x, lv.wv), lv.bv);
    std::vector<ad::Var> head_outs;
    for (std::size_t h = 0; h < heads; ++h) {
        ad::Var qh = ad::slice_cols(q, h * hd, (h + 1) * hd);
        ad::Var kh = ad::slice_cols(k, h * hd, (h + 1) * hd);
        ad::Var vh = ad::slice_cols(v, h * hd, (h + 1) * hd);
        ad::Var scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), scale);
        ad::Var weights = ad::masked_softmax_rows(scores, mask);
        head_outs.push_back(ad::matmul(weights, vh));
    }
    return ad::add_row_broadcast(ad::matmul(ad::concat_cols(head_outs), lv.wo), lv.bo);
}

ad::Var transformer_ad(ad::Var x, const std::vector<LayerVars>& layers, const Matrix& mask,
                       std::size_t heads, double eps) {
    for (const auto& lv : layers) {
        x = ad::add(x, mhsa_ad(ad::layer_norm(x, lv.ln1_g, lv.ln1_b, eps), lv, mask, heads));
        ad::Var h = ad::layer_norm(x, lv.ln2_g, lv.ln2_b, eps);
        ad::Var m = ad::add_row_broadcast(
            ad::matmul(ad::gelu(ad::add_row_broadcast(ad::matmul(h, lv.w1), lv.b1)), lv.w2),
            lv.b2);
        x = ad::add(x, m);
    }
    return x;
}

}  // namespace

WeightVars wrap_weights(const EncoderWeights& w, bool trainable) {
    WeightVars wv;
    wv.cfg = w.cfg;
    wv.tau = w.tau;
    wv.vision = wrap_tower(w.vision, trainable, wv.all);
    wv.text = wrap_tower(w.text, trainable, wv.all);
    wv.vis_in_w = wrap(w.vis_in_w, trainable, wv.all);
    wv.vis_in_b = wrap(w.vis_in_b, trainable, wv.all);
    wv.tok_embed = wrap(w.tok_embed, trainable, wv.all);
    wv.pos_embed = wrap(w.pos_embed, trainable, wv.all);
    wv.vis_special = wrap(w.vis_special, trainable, wv.all);
    wv.txt_special = wrap(w.txt_special, trainable, wv.all);
    wv.proj_v = wrap(w.proj_v, trainable, wv.all);
    wv.proj_t = wrap(w.proj_t, trainable, wv.all);
    return wv;
}

std::vector<Matrix*> weight_pointers(EncoderWeights& w) {
    std::vector<Matrix*> out;
    for (auto* tower : {&w.vision, &w.text})
        for (auto& lw : tower->layers)
            for (Matrix* m : {&lw.wq, &lw.bq, &lw.wk, &lw.bk, &lw.wv, &lw.bv, &lw.wo, &lw.bo,
                              &lw.w1, &lw.b1, &lw.w2, &lw.b2, &lw.ln1_g, &lw.ln1_b, &lw.ln2_g,
                              &lw.ln2_b})
                out.push_back(m);
    for (Matrix* m : {&w.vis_in_w, &w.vis_in_b, &w.tok_embed, &w.pos_embed, &w.vis_special,
                      &w.txt_special, &w.proj_v, &w.proj_t})
        out.push_back(m);
    return out;
}

PromptVars wrap_prompts(const PromptSet& p, bool trainable) {
    PromptVars pv;
    pv.k_main = p.k_main();
    pv.k_aux = p.k_aux();
    pv.group1 = trainable ? ad::param(p.group1) : ad::constant(p.group1);
    pv.group2 = trainable ? ad::param(p.group2) : ad::constant(p.group2);
    pv.auxiliary = trainable ? ad::param(p.auxiliary) : ad::constant(p.auxiliary);
    return pv;
}

ad::Var encode_image_ad(const Matrix& features, const PromptVars* prompts, const WeightVars& w,
                        const Matrix& mask) {
    ad::Var feats =
        ad::add_row_broadcast(ad::matmul(ad::constant(features), w.vis_in_w), w.vis_in_b);
    std::vector<ad::Var> parts{w.vis_special, feats};
    if (prompts) {
        parts.push_back(prompts->group1);
        parts.push_back(prompts->group2);
        if (prompts->k_aux) parts.push_back(prompts->auxiliary);
    }
    ad::Var x = ad::concat_rows(parts);
    if (x.rows() != mask.rows) throw ShapeError("encode_image_ad: mask dimension mismatch");
    return transformer_ad(x, w.vision, mask, w.cfg.heads, w.cfg.eps);
}

ad::Var encode_text_ad(const std::vector<std::size_t>& token_ids, const PromptVars* prompts,
                       const WeightVars& w, const Matrix& mask) {
    const std::size_t n = token_ids.size();
    ad::Var tok = ad::gather_rows(w.tok_embed, token_ids);
    const bool eos_last = w.cfg.text_variant == LayoutVariant::eos_last;
    ad::Var band =
        eos_last ? ad::concat_rows({tok, w.txt_special}) : ad::concat_rows({w.txt_special, tok});
    band = ad::add(band, ad::slice_rows(w.pos_embed, 0, n + 1));
    std::vector<ad::Var> parts{band};
    if (prompts) {
        parts.push_back(prompts->group1);
        parts.push_back(prompts->group2);
        if (prompts->k_aux) parts.push_back(prompts->auxiliary);
    }
    ad::Var x = ad::concat_rows(parts);
    if (x.rows() != mask.rows) throw ShapeError("encode_text_ad: mask dimension mismatch");
    return transformer_ad(x, w.text, mask, w.cfg.heads, w.cfg.eps);
}

namespace {

ad::Var project_rows_ad(const ad::Var& last, const ad::Var& proj, std::size_t special_pos,
                        const SequenceLayout& layout) {
    ad::Var special = ad::slice_rows(last, special_pos, special_pos + 1);
    ad::Var mains =
        ad::slice_rows(last, layout.group1_begin(), layout.group1_begin() + 2 * layout.k_main);
    return ad::matmul(ad::concat_rows({special, mains}), proj);
}

}  // namespace

ad::Var project_vision_ad(const ad::Var& x_last, const WeightVars& w,
                          const SequenceLayout& layout) {
    return project_rows_ad(x_last, w.proj_v, 0, layout);
}

ad::Var project_text_ad(const ad::Var& y_last, const WeightVars& w,
                        const SequenceLayout& layout) {
    const std::size_t special_pos =
        w.cfg.text_variant == LayoutVariant::eos_last ? layout.n_features : 0;
    return project_rows_ad(y_last, w.proj_t, special_pos, layout);
}

}  // namespace gpe
